#include "manet/sim_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace manet {

SimTime SimTime::seconds(double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("negative or NaN duration");
  return SimTime(static_cast<std::uint64_t>(std::llround(s * 1e6)));
}

std::ostream& operator<<(std::ostream& os, SimTime t) { return os << t.count() << "us"; }

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kGeneric: return "generic";
    case EventKind::kBeacon: return "beacon";
    case EventKind::kAtimEnd: return "atim_end";
    case EventKind::kNeighborTick: return "neighbor_tick";
    case EventKind::kTxStart: return "tx_start";
    case EventKind::kTxEnd: return "tx_end";
    case EventKind::kAtimSend: return "atim_send";
    case EventKind::kAtimAck: return "atim_ack";
    case EventKind::kAppEmit: return "app_emit";
    case EventKind::kTcpTimeout: return "tcp_timeout";
    case EventKind::kFeedbackTimer: return "feedback_timer";
    case EventKind::kJitterRelease: return "jitter_release";
  }
  return "unknown";
}

// FNV-1a over the label, mixed with the master seed through splitmix64.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::uint64_t z = master_seed ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view label)
    : label_(label), engine_(derive_seed(master_seed, label)) {}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::below(0)");
  // Rejection sampling keeps the draw unbiased and portable.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Simulator::EventId Simulator::schedule(SimTime fire_at, EventKind kind, NodeId target,
                                       Handler fn, std::uint64_t detail) {
  if (fire_at < now_) {
    std::ostringstream msg;
    msg << "event " << to_string(kind) << " for node " << target << " scheduled at "
        << fire_at << " but clock is " << now_;
    throw ContractViolation(msg.str());
  }
  const EventId id = next_seq_++;
  queue_.push(Event{fire_at, id, kind, target, detail, std::move(fn)});
  return id;
}

std::uint64_t Simulator::run(SimTime until) {
  std::uint64_t count = 0;
  while (!queue_.empty() && queue_.top().fire_at <= until) {
    // priority_queue::top is const; the handler is moved out before pop.
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    if (ev.fire_at < now_) throw ContractViolation("event queue went backwards");
    now_ = ev.fire_at;
    if (trace_ != nullptr) {
      *trace_ << now_.count() << '\t';
      if (ev.target == kHarness) {
        *trace_ << '-';
      } else {
        *trace_ << ev.target;
      }
      *trace_ << '\t' << to_string(ev.kind) << '\t' << ev.detail << '\n';
    }
    if (ev.fn) ev.fn();
    ++count;
    ++executed_;
  }
  if (until > now_) now_ = until;
  return count;
}

RngStream& Simulator::stream(std::string_view label) {
  auto it = streams_.find(label);
  if (it == streams_.end()) {
    it = streams_.emplace(std::string(label), RngStream(master_seed_, label)).first;
  }
  return it->second;
}

}  // namespace manet
