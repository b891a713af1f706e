#include "manet/traffic.hpp"

#include <algorithm>
#include <stdexcept>

namespace manet {

CbrEmission cbr_emit(CbrFlow& flow, SimTime t) {
  if (t < flow.start || t > flow.stop) throw ContractViolation("cbr_emit outside [start, stop]");
  CbrEmission e{flow.next_seq++, t, std::nullopt};
  const SimTime next = t + flow.interval;
  if (next <= flow.stop) e.next = next;
  return e;
}

std::uint64_t cbr_expected_count(const CbrFlow& flow) {
  if (flow.stop < flow.start) return 0;
  return (flow.stop - flow.start).count() / flow.interval.count() + 1;
}

TcpLiteSender::TcpLiteSender(TcpLiteConfig cfg) : cfg_(cfg), rto_(cfg.rto_initial) {
  if (cfg_.window == 0) throw std::invalid_argument("tcp window must be positive");
}

std::vector<TcpLiteSender::Emission> TcpLiteSender::send_window(SimTime t) {
  std::vector<Emission> out;
  if (aborted_) return out;
  while (inflight_.size() < cfg_.window && (greedy_ || backlog_ > 0)) {
    const std::uint64_t seq = next_seq_++;
    if (!greedy_) --backlog_;
    const std::uint64_t token = next_token_++;
    inflight_.emplace(seq, Inflight{t, t, 0, token});
    out.push_back(Emission{seq, t, token, rto_});
  }
  return out;
}

SimTime TcpLiteSender::rto_from_srtt() const {
  if (!srtt_) return std::max(cfg_.rto_initial, cfg_.rto_min);
  const SimTime twice = SimTime::seconds(2.0 * *srtt_);
  return std::clamp(twice, cfg_.rto_min, cfg_.rto_max);
}

std::size_t TcpLiteSender::on_ack(std::uint64_t ack, SimTime t) {
  if (aborted_ || ack <= cum_ack_) return 0;
  std::optional<double> sample;
  std::size_t cleared = 0;
  for (auto it = inflight_.begin(); it != inflight_.end() && it->first < ack;) {
    // Karn: only never-retransmitted packets give RTT samples.
    if (it->second.retx == 0) sample = (t - it->second.sent_at).to_seconds();
    it = inflight_.erase(it);
    ++cleared;
  }
  cum_ack_ = ack;
  if (sample) srtt_ = srtt_ ? 0.875 * *srtt_ + 0.125 * *sample : *sample;
  rto_ = rto_from_srtt();
  return cleared;
}

TcpLiteSender::TimeoutResult TcpLiteSender::on_timeout(std::uint64_t seq, std::uint64_t timer_token,
                                                       SimTime t) {
  TimeoutResult r;
  if (aborted_) return r;
  auto it = inflight_.find(seq);
  if (it == inflight_.end() || it->second.timer_token != timer_token) return r;
  if (it->second.retx >= cfg_.max_retx) {
    aborted_ = true;
    r.action = TimeoutAction::kAbort;
    return r;
  }
  rto_ = std::min(rto_ * 2, cfg_.rto_max);
  it->second.retx += 1;
  it->second.sent_at = t;
  it->second.timer_token = next_token_++;
  ++retransmissions_;
  r.action = TimeoutAction::kRetransmit;
  r.emission = Emission{seq, it->second.origin_time, it->second.timer_token, rto_};
  return r;
}

std::vector<TcpLiteReceiver::Delivery> TcpLiteReceiver::on_data(std::uint64_t seq,
                                                                SimTime origin_time) {
  std::vector<Delivery> out;
  if (seq < next_expected_) return out;
  out_of_order_.emplace(seq, origin_time);
  for (auto it = out_of_order_.begin();
       it != out_of_order_.end() && it->first == next_expected_;) {
    out.push_back(Delivery{it->first, it->second});
    ++next_expected_;
    it = out_of_order_.erase(it);
  }
  return out;
}

}  // namespace manet
