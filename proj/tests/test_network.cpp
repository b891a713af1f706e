#include <gtest/gtest.h>

#include <algorithm>
#include <queue>

#include "manet/harness.hpp"
#include "manet/network.hpp"

using namespace manet;

namespace {

ScenarioConfig static_config() {
  ScenarioConfig c;
  c.psm = false;
  c.mac_jitter_ms = 0.0;
  c.speed_mps = 0.0;
  c.warmup_s = 0.0;
  c.sim_time_s = 10.0;
  return c;
}

std::vector<Vec2> chain(std::size_t n, double spacing) {
  std::vector<Vec2> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(Vec2{spacing * static_cast<double>(i), 0.0});
  return v;
}

std::vector<NodeId> bfs_component(const std::vector<Vec2>& pos, NodeId src, double range) {
  std::vector<bool> seen(pos.size(), false);
  std::queue<NodeId> q;
  q.push(src);
  seen[src] = true;
  std::vector<NodeId> out;
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    if (u != src) out.push_back(u);
    for (NodeId v = 0; v < pos.size(); ++v) {
      if (!seen[v] && in_range(pos[u], pos[v], range)) {
        seen[v] = true;
        q.push(v);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Network, OneHopLosslessDelayIsOneAirtime) {
  auto cfg = static_config();
  Simulator sim(1);
  Network net(cfg, sim, chain(2, 100.0));
  net.start();
  const auto f = net.add_cbr_flow(0, 1, SimTime{}, SimTime::seconds(1.0));
  sim.run(SimTime::seconds(2.0));
  net.finish();
  const auto& c = net.counters(f);
  EXPECT_EQ(c.sent, 5u);
  EXPECT_EQ(c.received, 5u);
  EXPECT_NEAR(avg_delay(c), 0.002048, 1e-9);
  EXPECT_TRUE(net.audit().ok());
}

TEST(Network, WindowOneTcpMatchesCbrDelay) {
  auto cfg = static_config();
  cfg.tcp_window = 1;
  Simulator sim(1);
  Network net(cfg, sim, chain(2, 100.0));
  net.start();
  const auto f = net.add_tcp_flow(0, 1, SimTime{}, SimTime::seconds(2.0));
  sim.run(SimTime::seconds(3.0));
  net.finish();
  const auto& c = net.counters(f);
  ASSERT_GT(c.received, 0u);
  const double airtime = tx_duration(cfg.cbr_pkt_bytes, cfg.rate_bps).to_seconds();
  EXPECT_NEAR(avg_delay(c), airtime, airtime);
  EXPECT_TRUE(net.audit().ok());
}

class PsmChain : public ::testing::TestWithParam<Protocol> {};

// With every node dozing outside its windows, each hop costs a beacon interval.
TEST_P(PsmChain, TakesAtLeastFourIntervals) {
  auto cfg = static_config();
  cfg.psm = true;
  cfg.protocol = GetParam();
  cfg.p_gossip = 1.0;
  cfg.p_sleep = 1.0;
  Simulator sim(3);
  Network net(cfg, sim, chain(6, 200.0));
  net.start();
  const auto f = net.add_one_shot(0, 5, SimTime::ms(20) + SimTime::us(1));
  sim.run(SimTime::seconds(5.0));
  net.finish();
  const auto& c = net.counters(f);
  ASSERT_EQ(c.received, 1u);
  EXPECT_GE(avg_delay(c), 0.4);
  EXPECT_TRUE(net.audit().ok());
}

INSTANTIATE_TEST_SUITE_P(Protocols, PsmChain, ::testing::Values(Protocol::kGsp, Protocol::kAeerg));

TEST(Network, FullFloodReachesConnectedComponent) {
  auto cfg = static_config();
  cfg.p_gossip = 1.0;
  RngStream rng(11, "graphs");
  const Region region{600.0, 400.0};
  for (int g = 0; g < 5; ++g) {
    std::vector<Vec2> pos;
    for (int i = 0; i < 20; ++i) pos.push_back(uniform_point(rng, region));
    Simulator sim(static_cast<std::uint64_t>(g));
    Network net(cfg, sim, pos);
    net.start();
    const auto f = net.add_one_shot(0, kBroadcast, SimTime::ms(1));
    sim.run(SimTime::seconds(2.0));
    EXPECT_EQ(net.delivered_nodes(f), bfs_component(pos, 0, cfg.range_m)) << "graph " << g;
  }
}

TEST(Network, RangeBoundaryIsInclusive) {
  auto cfg = static_config();
  Simulator sim(1);
  Network net(cfg, sim, {Vec2{0, 0}, Vec2{250.0, 0}, Vec2{500.000001, 0}});
  net.start();
  const auto f = net.add_one_shot(0, kBroadcast, SimTime::ms(1));
  sim.run(SimTime::seconds(1.0));
  EXPECT_EQ(net.delivered_nodes(f), (std::vector<NodeId>{1}));
}

TEST(Network, FaultInjectedTcpIsExactlyOnce) {
  auto cfg = static_config();
  cfg.fault_loss = 0.3;
  cfg.traffic = TrafficKind::kTcp;
  cfg.tcp_app_rate_pps = 0.0;
  cfg.max_packets_per_flow = 200;
  cfg.sim_time_s = 200.0;
  Simulator sim(4);
  Network net(cfg, sim, chain(3, 200.0));
  net.start();
  const auto f = net.add_tcp_flow(0, 2, SimTime{}, SimTime::seconds(cfg.sim_time_s));
  sim.run(SimTime::seconds(cfg.sim_time_s));
  net.finish();
  const auto& log = net.delivery_log(f);
  for (std::size_t i = 0; i < log.size(); ++i) ASSERT_EQ(log[i], i);
  if (!net.flow_aborted(f)) {
    EXPECT_EQ(log.size(), 200u);
  }
  EXPECT_GT(net.stats().fault_losses, 0u);
  EXPECT_GT(net.stats().tcp_retransmissions, 0u);
  EXPECT_TRUE(net.audit().ok());
}

TEST(Network, AeergSourceBStaysWithinNeighborCount) {
  auto cfg = static_config();
  cfg.protocol = Protocol::kAeerg;
  cfg.psm = true;
  cfg.mac_jitter_ms = 10.0;
  cfg.speed_mps = 20.0;
  cfg.sim_time_s = 40.0;
  Simulator sim(8);
  Network net(cfg, sim);
  net.start();
  std::uint64_t changes = 0;
  bool bad = false;
  net.set_b_observer([&](NodeId n, std::uint32_t B) {
    ++changes;
    const auto bound = std::max<std::size_t>(1, net.table(n).size());
    if (B < 1 || B > bound) bad = true;
  });
  for (NodeId s = 0; s < 10; ++s) {
    net.add_cbr_flow(s, static_cast<NodeId>(49 - s), SimTime{}, SimTime::seconds(cfg.sim_time_s));
  }
  sim.run(SimTime::seconds(cfg.sim_time_s));
  net.finish();
  EXPECT_GT(changes, 0u);
  EXPECT_FALSE(bad);
  EXPECT_EQ(net.stats().b_violations, 0u);
  EXPECT_TRUE(net.audit().ok());
}

TEST(Network, PsmNodesDozeAndSaveEnergy) {
  auto cfg = static_config();
  cfg.sim_time_s = 20.0;
  double awake_j = 0, psm_j = 0;
  for (bool psm : {false, true}) {
    cfg.psm = psm;
    Simulator sim(2);
    Network net(cfg, sim, chain(4, 200.0));
    net.start();
    sim.run(SimTime::seconds(cfg.sim_time_s));
    net.finish();
    double total = 0;
    for (NodeId n = 0; n < 4; ++n) total += net.ledger(n).consumed();
    (psm ? psm_j : awake_j) = total;
    EXPECT_TRUE(net.audit().ok());
  }
  EXPECT_DOUBLE_EQ(awake_j, 4 * 20.0 * cfg.p_idle_w);
  EXPECT_LT(psm_j, awake_j);
}

TEST(Harness, RunIsDeterministic) {
  ScenarioConfig cfg;
  cfg.sim_time_s = 15.0;
  cfg.protocol = Protocol::kAeerg;
  const auto a = to_csv(run_one(cfg).row);
  const auto b = to_csv(run_one(cfg).row);
  EXPECT_EQ(a, b);
  cfg.seed = 2;
  EXPECT_NE(to_csv(run_one(cfg).row), a);
}

TEST(Harness, SingleNodeRunCompletesWithZeroPdr) {
  ScenarioConfig cfg;
  cfg.n_nodes = 1;
  cfg.sim_time_s = 10.0;
  const auto r = run_one(cfg);
  EXPECT_EQ(r.row.pdr, 0.0);
  EXPECT_FALSE(r.row.delay_defined);
}

TEST(Harness, CbrRunReconcilesAndOffersExactCount) {
  ScenarioConfig cfg;
  cfg.sim_time_s = 20.0;
  cfg.flows = 3;
  const auto r = run_one(cfg);
  ASSERT_EQ(r.audit.flows.size(), 3u);
  for (const auto& f : r.audit.flows) {
    // Flows start within the first second, so each sends 76 to 80 originals.
    EXPECT_GE(f.sent, 76u);
    EXPECT_LE(f.sent, 80u);
  }
  EXPECT_GE(r.row.pdr, 0.0);
  EXPECT_LE(r.row.pdr, 1.0);
  // At most 61 originals per flow fall in the 15 s measured window.
  EXPECT_LE(r.row.throughput_bps, 3 * 61 * 512 * 8 / 15.0);
}
