#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "manet/config.hpp"
#include "manet/mac_psm.hpp"
#include "manet/metrics.hpp"
#include "manet/mobility.hpp"
#include "manet/radio.hpp"
#include "manet/routing.hpp"
#include "manet/sim_core.hpp"
#include "manet/traffic.hpp"

namespace manet {

enum class PacketKind : std::uint8_t { kData, kFeedback, kTcpAck };

// Network-layer packet. uid is unique per emission, so a TCP retransmission
// is a new packet carrying the same application seq.
struct Packet {
  PacketKind kind = PacketKind::kData;
  std::uint64_t uid = 0;
  NodeId origin = 0;
  NodeId dst = kBroadcast;
  std::uint32_t flow = 0;
  std::uint64_t seq = 0;  // app seq, cumulative ack, or feedback window
  SimTime origin_time{};
  std::uint32_t hops = 0;
  std::uint32_t fanout = 1;  // originator's B
  std::uint32_t bytes = 0;
  double feedback_D = 0.0;
  bool tracked = false;  // per-original custody accounting applies
};

enum class FrameKind : std::uint8_t { kData, kAtim, kAtimAck };

struct Frame {
  FrameKind kind = FrameKind::kData;
  NodeId sender = 0;
  NodeId addressee = kBroadcast;  // ATIM / ACK destination
  std::vector<NodeId> targets;    // data: nodes asked to process it; empty = everyone
  Packet packet;
  double power_w = 0.0;
  double reach_m = 0.0;
  SimTime airtime{};
  bool control() const { return kind != FrameKind::kData; }
};

struct NetworkStats {
  std::uint64_t transmissions = 0;
  std::uint64_t data_transmissions = 0;
  std::uint64_t control_transmissions = 0;
  std::uint64_t collisions = 0;
  std::uint64_t fault_losses = 0;
  std::uint64_t doze_violations = 0;        // frames handed to or sent by a dozing node
  std::uint64_t atim_window_violations = 0; // data starting inside an ATIM window
  std::uint64_t b_violations = 0;           // B outside [1, max(1, |table|)]
  std::uint64_t duplicate_app_deliveries = 0;
  std::uint64_t tcp_retransmissions = 0;
  std::uint64_t tcp_aborts = 0;
  std::uint64_t feedback_frames = 0;
  std::uint64_t b_adjustments = 0;
  std::uint64_t source_b_sum = 0;  // flow sources' B, sampled every neighbor tick
  std::uint64_t source_b_samples = 0;
};

enum class FlowKind : std::uint8_t { kCbr, kTcp, kOneShot };

class Network {
 public:
  // Nodes placed uniformly at random and moving per cfg.
  Network(const ScenarioConfig& cfg, Simulator& sim);
  // Static nodes at the given positions (speed ignored).
  Network(const ScenarioConfig& cfg, Simulator& sim, std::vector<Vec2> positions);
  ~Network();
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  // Schedules beacons and neighbor ticks. Call once before running.
  void start();

  std::uint32_t add_cbr_flow(NodeId src, NodeId dst, SimTime start, SimTime stop);
  std::uint32_t add_tcp_flow(NodeId src, NodeId dst, SimTime start, SimTime stop);
  // A single data packet; dst may be kBroadcast to flood every node.
  std::uint32_t add_one_shot(NodeId src, NodeId dst, SimTime at);

  // Settles every energy ledger at `end` (the simulator clock).
  void finish();

  std::size_t size() const;
  const FlowCounters& counters(std::uint32_t flow) const;
  // Nodes that delivered a one-shot packet to their application.
  std::vector<NodeId> delivered_nodes(std::uint32_t flow) const;
  // Application-visible sequence at a flow's destination, in delivery order.
  const std::vector<std::uint64_t>& delivery_log(std::uint32_t flow) const;
  const TcpLiteSender* tcp_sender(std::uint32_t flow) const;
  bool flow_aborted(std::uint32_t flow) const;
  std::uint32_t flow_count() const;

  const EnergyLedger& ledger(NodeId n) const;
  const AeergState& aeerg(NodeId n) const;
  const NeighborTable& table(NodeId n) const;
  bool awake(NodeId n) const;
  Vec2 position(NodeId n);
  const NetworkStats& stats() const;
  const PowerTable& power_table() const;

  AuditReport audit() const;
  MetricsRow metrics_row() const;

  // Hook for tests: called with (node, B) whenever a source changes B.
  void set_b_observer(std::function<void(NodeId, std::uint32_t)> fn);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace manet
