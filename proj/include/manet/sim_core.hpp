#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace manet {

using NodeId = std::uint32_t;
inline constexpr NodeId kHarness = 0xffffffffu;

// Simulation clock in integer microseconds. Used for both instants and deltas.
class SimTime {
 public:
  constexpr SimTime() = default;
  static constexpr SimTime us(std::uint64_t v) { return SimTime(v); }
  static constexpr SimTime ms(std::uint64_t v) { return SimTime(v * 1000); }
  static SimTime seconds(double s);

  constexpr std::uint64_t count() const { return us_; }
  constexpr double to_seconds() const { return static_cast<double>(us_) * 1e-6; }

  constexpr auto operator<=>(const SimTime&) const = default;
  constexpr SimTime operator+(SimTime o) const { return SimTime(us_ + o.us_); }
  constexpr SimTime& operator+=(SimTime o) { us_ += o.us_; return *this; }
  // Saturates at zero.
  constexpr SimTime operator-(SimTime o) const { return SimTime(us_ > o.us_ ? us_ - o.us_ : 0); }
  constexpr SimTime operator*(std::uint64_t k) const { return SimTime(us_ * k); }

 private:
  constexpr explicit SimTime(std::uint64_t v) : us_(v) {}
  std::uint64_t us_ = 0;
};

std::ostream& operator<<(std::ostream& os, SimTime t);

enum class EventKind : std::uint8_t {
  kGeneric,
  kBeacon,
  kAtimEnd,
  kNeighborTick,
  kTxStart,
  kTxEnd,
  kAtimSend,
  kAtimAck,
  kAppEmit,
  kTcpTimeout,
  kFeedbackTimer,
  kJitterRelease,
};

std::string_view to_string(EventKind k);

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Deterministic per-concern random stream.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label);

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform01() < p; }
  std::uint64_t next() { return engine_(); }

  const std::string& label() const { return label_; }

 private:
  std::string label_;
  std::mt19937_64 engine_;
};

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

class Simulator {
 public:
  using Handler = std::function<void()>;
  using EventId = std::uint64_t;

  explicit Simulator(std::uint64_t master_seed) : master_seed_(master_seed) {}
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  SimTime now() const { return now_; }
  std::uint64_t master_seed() const { return master_seed_; }

  // Throws ContractViolation when fire_at is in the past.
  EventId schedule(SimTime fire_at, EventKind kind, NodeId target, Handler fn,
                   std::uint64_t detail = 0);
  EventId schedule_in(SimTime delay, EventKind kind, NodeId target, Handler fn,
                      std::uint64_t detail = 0) {
    return schedule(now_ + delay, kind, target, std::move(fn), detail);
  }

  // Executes every event with fire_at <= until, then sets the clock to until.
  std::uint64_t run(SimTime until);

  RngStream& stream(std::string_view label);

  void set_trace(std::ostream* sink) { trace_ = sink; }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t executed() const { return executed_; }

 private:
  struct Event {
    SimTime fire_at;
    std::uint64_t seq;
    EventKind kind;
    NodeId target;
    std::uint64_t detail;
    Handler fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  std::uint64_t master_seed_;
  SimTime now_{};
  std::uint64_t next_seq_ = 0;
  std::uint64_t executed_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::map<std::string, RngStream, std::less<>> streams_;
  std::ostream* trace_ = nullptr;
};

}  // namespace manet
