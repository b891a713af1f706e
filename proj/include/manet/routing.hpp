#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "manet/mobility.hpp"
#include "manet/sim_core.hpp"

namespace manet {

enum class Protocol : std::uint8_t { kGsp, kAeerg };

struct Neighbor {
  NodeId id;
  double distance;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Neighbors within range, nearest first (ties broken by id).
class NeighborTable {
 public:
  NeighborTable() = default;
  explicit NeighborTable(std::vector<Neighbor> entries);

  // positions[i] is node i; `alive` filters candidates when given.
  static NeighborTable build(NodeId self, std::span<const Vec2> positions, double range_m,
                             std::span<const bool> alive = {});

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Neighbor>& entries() const { return entries_; }
  bool contains(NodeId id) const;

 private:
  std::vector<Neighbor> entries_;
};

struct GossipConfig {
  double p_gossip = 0.7;
  std::uint32_t hops_forced = 1;
};

// GOSSIP1(p, k): receivers within hops_forced hops of the source always
// forward, everyone else forwards with probability p_gossip.
bool gossip_decide(const GossipConfig& cfg, std::uint32_t hop, RngStream& rng);

struct AeergState {
  std::uint32_t B = 1;
  double rt = 0.9;
  double p_sleep = 0.5;
  std::optional<double> last_D;
};

struct TargetSelection {
  std::vector<NodeId> targets;
  double farthest = 0.0;
};

// The min(B, |table|) nearest neighbors.
TargetSelection select_targets(std::uint32_t B, const NeighborTable& table);

// Unit step toward more neighbors when D < RT, fewer when D >= RT.
// neighbor_count bounds B from above (at least 1).
AeergState adjust_B(AeergState state, double D, std::size_t neighbor_count);

// Keeps B inside [1, max(1, neighbor_count)] after a table refresh.
std::uint32_t clamp_B(std::uint32_t B, std::size_t neighbor_count);

enum class SleepDecision : std::uint8_t { kActive, kSleep };

SleepDecision sleep_decide(const AeergState& state, bool forced_active, RngStream& rng);

struct FeedbackFrame {
  std::uint32_t flow = 0;
  double D = 0.0;
  std::uint32_t window = 0;
};

// Destination side of the delivery-ratio feedback loop for one flow.
// A window closes after `window_pkts` receptions or `window_period`, whichever
// comes first. "Sent" is inferred from the highest source sequence seen.
class FeedbackWindow {
 public:
  FeedbackWindow(std::uint32_t flow, std::uint32_t window_pkts)
      : flow_(flow), window_pkts_(window_pkts) {}

  // Records a distinct data arrival. Returns a frame when the window fills.
  std::optional<FeedbackFrame> on_data(std::uint64_t seq);
  // Closes the current window regardless of fill level.
  FeedbackFrame close();

  std::uint32_t window_id() const { return window_; }
  std::uint64_t total_received() const { return total_received_; }
  std::uint64_t total_sent() const { return highest_ + (seen_any_ ? 1 : 0); }

 private:
  std::uint32_t flow_;
  std::uint32_t window_pkts_;
  std::uint32_t window_ = 0;
  bool seen_any_ = false;
  std::uint64_t highest_ = 0;
  std::uint64_t total_received_ = 0;
  std::uint64_t sent_at_open_ = 0;
  std::uint64_t received_at_open_ = 0;
};

// D = received / max(sent, 1), clamped to 1 when late retransmissions fill
// gaps from earlier windows.
FeedbackFrame destination_feedback(std::uint32_t flow, std::uint32_t window, std::uint64_t sent,
                                   std::uint64_t received);

// Seen-set keyed by the network-level packet id.
class DuplicateCache {
 public:
  // True the first time uid is offered.
  bool first_sight(std::uint64_t uid) { return seen_.insert(uid).second; }
  bool seen(std::uint64_t uid) const { return seen_.contains(uid); }
  std::size_t size() const { return seen_.size(); }

 private:
  std::unordered_set<std::uint64_t> seen_;
};

}  // namespace manet
