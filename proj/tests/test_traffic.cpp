#include <gtest/gtest.h>

#include <set>

#include "manet/traffic.hpp"

using namespace manet;

TEST(Cbr, FixedIntervalEmissions) {
  CbrFlow f{0, 1, 512, SimTime::ms(250), SimTime::ms(100), SimTime::seconds(10.0), 0};
  auto e = cbr_emit(f, f.start);
  EXPECT_EQ(e.seq, 0u);
  EXPECT_EQ(e.origin_time, SimTime::ms(100));
  ASSERT_TRUE(e.next);
  EXPECT_EQ(*e.next, SimTime::ms(350));
  e = cbr_emit(f, *e.next);
  EXPECT_EQ(e.seq, 1u);
  EXPECT_EQ(*e.next, SimTime::ms(600));
}

TEST(Cbr, StopsCleanlyBeforeStop) {
  CbrFlow f{0, 1, 512, SimTime::ms(250), SimTime{}, SimTime::ms(400), 0};
  auto e = cbr_emit(f, SimTime::ms(250));
  EXPECT_FALSE(e.next);
  EXPECT_THROW(cbr_emit(f, SimTime::ms(401)), ContractViolation);
}

// A 100 s flow at 4 packets/s, with stop exclusive of the final instant.
TEST(Cbr, HundredSecondsAtFourPerSecondIsFourHundredPackets) {
  CbrFlow f{0, 1, 512, SimTime::ms(250), SimTime{}, SimTime::seconds(100.0) - SimTime::us(1), 0};
  std::uint64_t sent = 0;
  std::optional<SimTime> t = f.start;
  while (t) {
    t = cbr_emit(f, *t).next;
    ++sent;
  }
  EXPECT_EQ(sent, 400u);
  EXPECT_EQ(cbr_expected_count(f), 400u);
}

TEST(Cbr, CountFormulaMatchesEmissionLoop) {
  RngStream rng(1, "cbr");
  for (int i = 0; i < 200; ++i) {
    const SimTime start = SimTime::us(rng.below(3'000'000));
    const SimTime stop = start + SimTime::us(rng.below(20'000'000));
    CbrFlow f{0, 1, 512, SimTime::us(1 + rng.below(900'000)), start, stop, 0};
    std::uint64_t sent = 0;
    std::optional<SimTime> t = start;
    while (t) {
      t = cbr_emit(f, *t).next;
      ++sent;
    }
    ASSERT_EQ(sent, cbr_expected_count(f));
  }
}

TEST(TcpLite, WindowAccounting) {
  TcpLiteSender s;
  s.set_greedy(true);
  EXPECT_EQ(s.send_window(SimTime{}).size(), 8u);
  EXPECT_EQ(s.send_window(SimTime{}).size(), 0u);
  EXPECT_EQ(s.on_ack(3, SimTime::ms(100)), 3u);
  const auto more = s.send_window(SimTime::ms(100));
  ASSERT_EQ(more.size(), 3u);
  EXPECT_EQ(more.front().seq, 8u);
  EXPECT_EQ(more.back().seq, 10u);
}

TEST(TcpLite, DuplicateAckChangesNothing) {
  TcpLiteSender s;
  s.set_greedy(true);
  s.send_window(SimTime{});
  s.on_ack(2, SimTime::ms(10));
  const auto rto = s.rto();
  EXPECT_EQ(s.on_ack(2, SimTime::ms(20)), 0u);
  EXPECT_EQ(s.cum_ack(), 2u);
  EXPECT_EQ(s.inflight_count(), 6u);
  EXPECT_EQ(s.rto(), rto);
  EXPECT_EQ(s.on_ack(7, SimTime::ms(30)), 5u);
}

TEST(TcpLite, AppLimitedSenderUsesBacklog) {
  TcpLiteSender s;
  s.offer(3);
  EXPECT_EQ(s.send_window(SimTime{}).size(), 3u);
  EXPECT_EQ(s.send_window(SimTime{}).size(), 0u);
  s.offer(1);
  EXPECT_EQ(s.send_window(SimTime{}).size(), 1u);
}

TEST(TcpLite, TimeoutsDoubleRto) {
  TcpLiteSender s;
  s.offer(1);
  auto e = s.send_window(SimTime{}).front();
  std::vector<double> seen{e.rto.to_seconds()};
  SimTime t{};
  for (int i = 0; i < 2; ++i) {
    t += e.rto;
    const auto r = s.on_timeout(e.seq, e.timer_token, t);
    ASSERT_EQ(r.action, TcpLiteSender::TimeoutAction::kRetransmit);
    EXPECT_EQ(r.emission.origin_time, SimTime{});
    e = r.emission;
    seen.push_back(e.rto.to_seconds());
  }
  EXPECT_EQ(seen, (std::vector<double>{1, 2, 4}));
}

TEST(TcpLite, StaleTimerIsIgnored) {
  TcpLiteSender s;
  s.offer(1);
  const auto e = s.send_window(SimTime{}).front();
  s.on_ack(1, SimTime::ms(5));
  EXPECT_EQ(s.on_timeout(e.seq, e.timer_token, SimTime::seconds(1.0)).action,
            TcpLiteSender::TimeoutAction::kIgnore);
}

// srtt follows 7/8 smoothing; rto = clamp(2 srtt, rto_min, rto_max).
TEST(TcpLite, RttSmoothingTrace) {
  TcpLiteConfig cfg;
  cfg.rto_min = SimTime::ms(100);
  cfg.rto_initial = SimTime::ms(1000);
  TcpLiteSender s(cfg);
  s.offer(3);
  s.send_window(SimTime{});
  s.on_ack(1, SimTime::ms(400));  // sample 0.4
  EXPECT_DOUBLE_EQ(*s.srtt(), 0.4);
  EXPECT_EQ(s.rto(), SimTime::ms(800));
  s.on_ack(2, SimTime::ms(800));  // sample 0.8
  EXPECT_DOUBLE_EQ(*s.srtt(), 0.875 * 0.4 + 0.125 * 0.8);
  EXPECT_EQ(s.rto(), SimTime::ms(900));
  s.on_ack(3, SimTime::ms(300'000));
  EXPECT_EQ(s.rto(), cfg.rto_max);
}

TEST(TcpLite, KarnSkipsRetransmittedSamples) {
  TcpLiteSender s;
  s.offer(1);
  const auto e = s.send_window(SimTime{}).front();
  s.on_timeout(e.seq, e.timer_token, SimTime::seconds(1.0));
  s.on_ack(1, SimTime::seconds(1.2));
  EXPECT_FALSE(s.srtt());
  EXPECT_EQ(s.rto(), SimTime::seconds(1.0));  // backoff reset on ack
}

TEST(TcpLite, AbortsAfterMaxRetransmissions) {
  TcpLiteConfig cfg;
  cfg.max_retx = 2;
  TcpLiteSender s(cfg);
  s.offer(1);
  auto e = s.send_window(SimTime{}).front();
  SimTime t{};
  for (int i = 0; i < 2; ++i) {
    t += e.rto;
    e = s.on_timeout(e.seq, e.timer_token, t).emission;
  }
  t += e.rto;
  EXPECT_EQ(s.on_timeout(e.seq, e.timer_token, t).action, TcpLiteSender::TimeoutAction::kAbort);
  EXPECT_TRUE(s.aborted());
  EXPECT_TRUE(s.send_window(t).empty());
}

TEST(TcpLite, ReceiverDeliversInOrderOnce) {
  TcpLiteReceiver r;
  EXPECT_TRUE(r.on_data(1, SimTime::us(1)).empty());
  EXPECT_EQ(r.ack(), 0u);
  const auto d = r.on_data(0, SimTime::us(0));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].seq, 0u);
  EXPECT_EQ(d[1].seq, 1u);
  EXPECT_EQ(d[1].origin_time, SimTime::us(1));
  EXPECT_TRUE(r.on_data(1, SimTime::us(1)).empty());
  EXPECT_EQ(r.ack(), 2u);
}

// Random arrival orders with duplicates: the application sees 0..n-1 once each.
TEST(TcpLite, ReceiverPropertyGapFreeNoDuplicates) {
  RngStream rng(5, "tcp");
  for (int trial = 0; trial < 100; ++trial) {
    TcpLiteReceiver r;
    const std::uint64_t n = 1 + rng.below(60);
    std::vector<std::uint64_t> app;
    std::set<std::uint64_t> pending;
    for (std::uint64_t i = 0; i < n; ++i) pending.insert(i);
    while (!pending.empty()) {
      auto it = pending.begin();
      std::advance(it, static_cast<long>(rng.below(pending.size())));
      const std::uint64_t seq = *it;
      if (rng.bernoulli(0.7)) pending.erase(it);  // otherwise a duplicate arrives later
      for (const auto& d : r.on_data(seq, SimTime{})) app.push_back(d.seq);
    }
    ASSERT_EQ(app.size(), n);
    for (std::uint64_t i = 0; i < n; ++i) ASSERT_EQ(app[i], i);
  }
}
