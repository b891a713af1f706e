#include "manet/routing.hpp"

#include <algorithm>
#include <stdexcept>

#include "manet/radio.hpp"

namespace manet {

NeighborTable::NeighborTable(std::vector<Neighbor> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
}

NeighborTable NeighborTable::build(NodeId self, std::span<const Vec2> positions, double range_m,
                                   std::span<const bool> alive) {
  std::vector<Neighbor> found;
  const Vec2 me = positions[self];
  for (NodeId i = 0; i < positions.size(); ++i) {
    if (i == self) continue;
    if (!alive.empty() && !alive[i]) continue;
    if (in_range(me, positions[i], range_m)) found.push_back({i, distance(me, positions[i])});
  }
  return NeighborTable(std::move(found));
}

bool NeighborTable::contains(NodeId id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Neighbor& n) { return n.id == id; });
}

bool gossip_decide(const GossipConfig& cfg, std::uint32_t hop, RngStream& rng) {
  if (hop <= cfg.hops_forced) return true;
  if (cfg.p_gossip >= 1.0) return true;
  if (cfg.p_gossip <= 0.0) return false;
  return rng.bernoulli(cfg.p_gossip);
}

TargetSelection select_targets(std::uint32_t B, const NeighborTable& table) {
  TargetSelection sel;
  const std::size_t n = std::min<std::size_t>(B, table.size());
  sel.targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    sel.targets.push_back(table.entries()[i].id);
    sel.farthest = table.entries()[i].distance;
  }
  return sel;
}

std::uint32_t clamp_B(std::uint32_t B, std::size_t neighbor_count) {
  const auto upper = static_cast<std::uint32_t>(std::max<std::size_t>(1, neighbor_count));
  return std::clamp<std::uint32_t>(B, 1, upper);
}

AeergState adjust_B(AeergState state, double D, std::size_t neighbor_count) {
  if (!(D >= 0.0 && D <= 1.0)) throw std::invalid_argument("adjust_B: D outside [0, 1]");
  if (D < state.rt) {
    state.B = clamp_B(state.B + 1, neighbor_count);
  } else {
    state.B = clamp_B(state.B > 1 ? state.B - 1 : 1, neighbor_count);
  }
  state.last_D = D;
  return state;
}

SleepDecision sleep_decide(const AeergState& state, bool forced_active, RngStream& rng) {
  if (forced_active || state.p_sleep <= 0.0) return SleepDecision::kActive;
  if (state.p_sleep >= 1.0) return SleepDecision::kSleep;
  return rng.bernoulli(state.p_sleep) ? SleepDecision::kSleep : SleepDecision::kActive;
}

std::optional<FeedbackFrame> FeedbackWindow::on_data(std::uint64_t seq) {
  if (!seen_any_ || seq > highest_) highest_ = seq;
  seen_any_ = true;
  ++total_received_;
  if (total_received_ > total_sent()) {
    throw std::logic_error("FeedbackWindow: more distinct receptions than packets sent");
  }
  if (total_received_ - received_at_open_ >= window_pkts_) return close();
  return std::nullopt;
}

FeedbackFrame FeedbackWindow::close() {
  const std::uint64_t sent = total_sent() - sent_at_open_;
  const std::uint64_t received = total_received_ - received_at_open_;
  FeedbackFrame f = destination_feedback(flow_, window_, sent, received);
  sent_at_open_ = total_sent();
  received_at_open_ = total_received_;
  ++window_;
  return f;
}

FeedbackFrame destination_feedback(std::uint32_t flow, std::uint32_t window, std::uint64_t sent,
                                   std::uint64_t received) {
  const double ratio =
      static_cast<double>(received) / static_cast<double>(std::max<std::uint64_t>(sent, 1));
  return FeedbackFrame{flow, std::min(1.0, ratio), window};
}

}  // namespace manet
