#include <gtest/gtest.h>

#include "manet/routing.hpp"

using namespace manet;

namespace {
NeighborTable abc() { return NeighborTable({{12, 200.0}, {10, 50.0}, {11, 120.0}}); }
}  // namespace

TEST(NeighborTable, SortsByDistanceThenId) {
  const NeighborTable t({{5, 80.0}, {3, 80.0}, {9, 10.0}});
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.entries()[0].id, 9u);
  EXPECT_EQ(t.entries()[1].id, 3u);
  EXPECT_EQ(t.entries()[2].id, 5u);
}

TEST(NeighborTable, BuildUsesInclusiveRangeAndAliveMask) {
  const std::vector<Vec2> pos{{0, 0}, {250, 0}, {251, 0}, {0, 100}};
  const bool alive[] = {true, true, true, false};
  const auto t = NeighborTable::build(0, pos, 250.0, alive);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.entries()[0].id, 1u);
  const auto all = NeighborTable::build(0, pos, 250.0);
  EXPECT_EQ(all.size(), 2u);
  EXPECT_TRUE(all.contains(3));
  EXPECT_FALSE(all.contains(2));
}

TEST(SelectTargets, NearestPrefix) {
  const auto t = abc();
  EXPECT_EQ(select_targets(1, t).targets, (std::vector<NodeId>{10}));
  EXPECT_EQ(select_targets(2, t).targets, (std::vector<NodeId>{10, 11}));
  const auto all = select_targets(5, t);
  EXPECT_EQ(all.targets, (std::vector<NodeId>{10, 11, 12}));
  EXPECT_DOUBLE_EQ(all.farthest, 200.0);
  EXPECT_TRUE(select_targets(3, NeighborTable{}).targets.empty());
}

TEST(AdjustB, StepsTowardThreshold) {
  AeergState s{3, 0.9, 0.5, std::nullopt};
  EXPECT_EQ(adjust_B(s, 0.8, 10).B, 4u);
  EXPECT_EQ(adjust_B(s, 0.95, 10).B, 2u);
  EXPECT_EQ(adjust_B(s, 0.9, 10).B, 2u);  // D == RT counts as reliable
  s.B = 1;
  EXPECT_EQ(adjust_B(s, 1.0, 10).B, 1u);
  s.B = 10;
  EXPECT_EQ(adjust_B(s, 0.0, 10).B, 10u);
  EXPECT_EQ(adjust_B(s, 0.0, 0).B, 1u);
  EXPECT_EQ(*adjust_B(s, 0.25, 10).last_D, 0.25);
  EXPECT_THROW(adjust_B(s, 1.5, 10), std::invalid_argument);
}

// Zero feedback reaches the neighbor count within that many windows and full
// feedback returns to one within B0 windows, for every table size.
TEST(AdjustB, MonotoneResponse) {
  for (std::size_t n = 0; n <= 40; ++n) {
    AeergState s;
    std::size_t windows = 0;
    while (s.B < std::max<std::size_t>(1, n)) {
      s = adjust_B(s, 0.0, n);
      ++windows;
    }
    EXPECT_LE(windows, std::max<std::size_t>(1, n));
    const std::uint32_t b0 = s.B;
    windows = 0;
    while (s.B > 1) {
      s = adjust_B(s, 1.0, n);
      ++windows;
    }
    EXPECT_LE(windows, b0);
  }
}

TEST(ClampB, KeepsBInsideTable) {
  EXPECT_EQ(clamp_B(7, 3), 3u);
  EXPECT_EQ(clamp_B(0, 3), 1u);
  EXPECT_EQ(clamp_B(4, 0), 1u);
}

TEST(Gossip, ForcedHopsAlwaysForward) {
  RngStream rng(1, "gossip");
  const GossipConfig never{0.0, 1};
  EXPECT_TRUE(gossip_decide(never, 1, rng));
  EXPECT_FALSE(gossip_decide(never, 2, rng));
  EXPECT_TRUE(gossip_decide(GossipConfig{1.0, 1}, 9, rng));
}

TEST(Gossip, ForwardFractionMatchesProbability) {
  RngStream rng(2, "gossip");
  const GossipConfig cfg{0.7, 1};
  int fwd = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) fwd += gossip_decide(cfg, 5, rng) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(fwd) / n, 0.7, 0.01);
}

TEST(Sleep, ForcedNodesStayActive) {
  RngStream rng(3, "sleep");
  AeergState s;
  s.p_sleep = 1.0;
  EXPECT_EQ(sleep_decide(s, false, rng), SleepDecision::kSleep);
  EXPECT_EQ(sleep_decide(s, true, rng), SleepDecision::kActive);
  s.p_sleep = 0.0;
  EXPECT_EQ(sleep_decide(s, false, rng), SleepDecision::kActive);
}

TEST(Sleep, SleepFractionMatchesProbability) {
  RngStream rng(4, "sleep");
  AeergState s;
  s.p_sleep = 0.5;
  int asleep = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) asleep += sleep_decide(s, false, rng) == SleepDecision::kSleep;
  EXPECT_NEAR(static_cast<double>(asleep) / n, 0.5, 0.01);
}

TEST(Feedback, RatioOfWindow) {
  EXPECT_DOUBLE_EQ(destination_feedback(0, 0, 50, 45).D, 0.9);
  EXPECT_DOUBLE_EQ(destination_feedback(0, 0, 0, 0).D, 0.0);
}

TEST(Feedback, WindowClosesAfterPacketCount) {
  FeedbackWindow w(3, 4);
  EXPECT_FALSE(w.on_data(0));
  EXPECT_FALSE(w.on_data(1));
  EXPECT_FALSE(w.on_data(3));
  const auto f = w.on_data(4);  // seq 2 lost: 4 of 5
  ASSERT_TRUE(f);
  EXPECT_EQ(f->flow, 3u);
  EXPECT_EQ(f->window, 0u);
  EXPECT_DOUBLE_EQ(f->D, 0.8);
  EXPECT_EQ(w.window_id(), 1u);
}

TEST(Feedback, TimerCloseWithNoArrivalsReportsZero) {
  FeedbackWindow w(0, 20);
  w.on_data(0);
  w.close();
  const auto f = w.close();
  EXPECT_DOUBLE_EQ(f.D, 0.0);
  EXPECT_EQ(f.window, 1u);
}

TEST(Feedback, LateFillInIsClampedToOne) {
  FeedbackWindow w(0, 3);
  w.on_data(0);
  w.on_data(2);
  w.on_data(3);  // closes: 3 of 4
  EXPECT_FALSE(w.on_data(1));
  w.on_data(4);
  const auto f = w.on_data(5);  // 3 arrivals against 2 new sequence numbers
  ASSERT_TRUE(f);
  EXPECT_DOUBLE_EQ(f->D, 1.0);
}

TEST(Feedback, ReceivedBeyondSentIsRejected) {
  FeedbackWindow w(0, 20);
  w.on_data(0);
  EXPECT_THROW(w.on_data(0), std::logic_error);
}

TEST(DuplicateCache, FirstSightOnly) {
  DuplicateCache c;
  EXPECT_TRUE(c.first_sight(9));
  EXPECT_FALSE(c.first_sight(9));
  EXPECT_TRUE(c.seen(9));
  EXPECT_EQ(c.size(), 1u);
}
