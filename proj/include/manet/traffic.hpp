#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "manet/sim_core.hpp"

namespace manet {

struct CbrFlow {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint32_t pkt_bytes = 512;
  SimTime interval = SimTime::ms(250);
  SimTime start{};
  SimTime stop{};
  std::uint64_t next_seq = 0;
};

struct CbrEmission {
  std::uint64_t seq;
  SimTime origin_time;
  std::optional<SimTime> next;  // empty once the flow is done
};

// Precondition: start <= t <= stop.
CbrEmission cbr_emit(CbrFlow& flow, SimTime t);

// floor((stop - start) / interval) + 1
std::uint64_t cbr_expected_count(const CbrFlow& flow);

struct TcpLiteConfig {
  std::uint32_t window = 8;
  SimTime rto_initial = SimTime::ms(1000);
  SimTime rto_min = SimTime::ms(1000);
  SimTime rto_max = SimTime::ms(32000);
  std::uint32_t max_retx = 8;
};

// Fixed-window sender with cumulative acks and per-packet retransmission
// timers. No congestion control.
class TcpLiteSender {
 public:
  struct Inflight {
    SimTime sent_at;      // most recent transmission
    SimTime origin_time;  // first transmission
    std::uint32_t retx = 0;
    std::uint64_t timer_token = 0;
  };
  struct Emission {
    std::uint64_t seq;
    SimTime origin_time;
    std::uint64_t timer_token;
    SimTime rto;
  };
  enum class TimeoutAction : std::uint8_t { kIgnore, kRetransmit, kAbort };
  struct TimeoutResult {
    TimeoutAction action = TimeoutAction::kIgnore;
    Emission emission{};
  };

  explicit TcpLiteSender(TcpLiteConfig cfg = {});

  // App-limited sources add packets here. A greedy sender never runs dry.
  void offer(std::uint64_t packets) { backlog_ += packets; }
  void set_greedy(bool greedy) { greedy_ = greedy; }

  // New originals while the window has room.
  std::vector<Emission> send_window(SimTime t);
  // Cumulative ack: every seq < ack is acknowledged. Returns entries cleared.
  std::size_t on_ack(std::uint64_t ack, SimTime t);
  TimeoutResult on_timeout(std::uint64_t seq, std::uint64_t timer_token, SimTime t);

  std::uint64_t cum_ack() const { return cum_ack_; }
  std::uint64_t next_seq() const { return next_seq_; }
  std::size_t inflight_count() const { return inflight_.size(); }
  const std::map<std::uint64_t, Inflight>& inflight() const { return inflight_; }
  SimTime rto() const { return rto_; }
  std::optional<double> srtt() const { return srtt_; }
  bool aborted() const { return aborted_; }
  std::uint64_t retransmissions() const { return retransmissions_; }
  std::uint64_t backlog() const { return backlog_; }
  const TcpLiteConfig& config() const { return cfg_; }

 private:
  SimTime rto_from_srtt() const;

  TcpLiteConfig cfg_;
  bool greedy_ = false;
  bool aborted_ = false;
  std::uint64_t backlog_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t cum_ack_ = 0;
  std::uint64_t next_token_ = 1;
  std::uint64_t retransmissions_ = 0;
  std::optional<double> srtt_;
  SimTime rto_;
  std::map<std::uint64_t, Inflight> inflight_;
};

// In-order, exactly-once delivery at the destination.
class TcpLiteReceiver {
 public:
  struct Delivery {
    std::uint64_t seq;
    SimTime origin_time;
  };

  // Returns the packets released to the application, in order.
  std::vector<Delivery> on_data(std::uint64_t seq, SimTime origin_time);
  // Cumulative ack value: next expected sequence number.
  std::uint64_t ack() const { return next_expected_; }
  std::size_t held() const { return out_of_order_.size(); }

 private:
  std::uint64_t next_expected_ = 0;
  std::map<std::uint64_t, SimTime> out_of_order_;
};

}  // namespace manet
