#include <gtest/gtest.h>

#include <cmath>

#include "manet/radio.hpp"

using namespace manet;

TEST(Radio, RangeBoundaryIsInclusive) {
  EXPECT_TRUE(in_range({0, 0}, {250, 0}, 250));
  EXPECT_FALSE(in_range({0, 0}, {250.001, 0}, 250));
  EXPECT_TRUE(in_range({0, 0}, {150, 200}, 250));
}

TEST(Radio, AirtimeRoundsUpToWholeMicroseconds) {
  EXPECT_EQ(tx_duration(512, 2'000'000).count(), 2048u);
  EXPECT_EQ(tx_duration(0, 2'000'000).count(), 0u);
  EXPECT_EQ(tx_duration(1, 2'000'000).count(), 4u);
  EXPECT_EQ(tx_duration(1, 3'000'000).count(), 3u);  // 2.67 us rounds up
  EXPECT_THROW(tx_duration(1, 0), std::invalid_argument);
}

TEST(Radio, TransmitPowerScalesWithDistance) {
  const PowerTable t;
  EXPECT_DOUBLE_EQ(tx_power_for_distance(125, 250, t), 0.35);
  EXPECT_DOUBLE_EQ(tx_power_for_distance(250, 250, t), 1.4);
  EXPECT_DOUBLE_EQ(tx_power_for_distance(10, 250, t), 0.14);  // floor
  EXPECT_THROW(tx_power_for_distance(251, 250, t), std::invalid_argument);
  EXPECT_THROW(tx_power_for_distance(-1, 250, t), std::invalid_argument);
}

TEST(Radio, ReachInvertsPowerLaw) {
  const PowerTable t;
  for (double d : {79.1, 100.0, 180.5, 250.0}) {
    const double p = tx_power_for_distance(d, 250, t);
    EXPECT_NEAR(reach_for_power(p, 250, t), d, 1e-9);
  }
}

TEST(Radio, PowerTableOrdering) {
  PowerTable t;
  EXPECT_TRUE(t.valid());
  t.p_doze = 0.8;
  EXPECT_FALSE(t.valid());
}

TEST(EnergyLedger, ChargesModeTimesPower) {
  const PowerTable t;
  EnergyLedger e(1000);
  e.accrue(RadioMode::kTransmit, 5.0, t);
  EXPECT_DOUBLE_EQ(e.consumed(), 7.0);
  e.accrue(RadioMode::kDoze, 10.0, t);
  EXPECT_NEAR(e.consumed(), 7.45, 1e-12);
  EXPECT_NEAR(e.residual(), 992.55, 1e-9);
  EXPECT_DOUBLE_EQ(e.mode_seconds(RadioMode::kDoze), 10.0);
}

TEST(EnergyLedger, DepletionBooksDeadTime) {
  const PowerTable t;
  EnergyLedger e(5.0);
  e.accrue(RadioMode::kTransmit, 10.0, t);
  ASSERT_TRUE(e.dead());
  EXPECT_NEAR(*e.death_offset(), 5.0 / 1.4, 1e-12);
  EXPECT_NEAR(e.dead_seconds(), 10.0 - 5.0 / 1.4, 1e-12);
  EXPECT_DOUBLE_EQ(e.consumed(), 5.0);
  EXPECT_DOUBLE_EQ(e.residual(), 0.0);
  e.accrue(RadioMode::kIdle, 2.0, t);
  EXPECT_DOUBLE_EQ(e.consumed(), 5.0);
  EXPECT_NEAR(e.accounted_seconds(), 12.0, 1e-12);
}

TEST(EnergyLedger, OverridePowerIsUsedForTransmit) {
  const PowerTable t;
  EnergyLedger e(100);
  e.accrue(RadioMode::kTransmit, 2.0, t, 0.35);
  EXPECT_DOUBLE_EQ(e.consumed(), 0.7);
  EXPECT_DOUBLE_EQ(e.recomputed(t), 0.7);
}

// Many tiny intervals must still sum to the elapsed time and the recomputed
// energy must match to well under a nanojoule.
TEST(EnergyLedger, ConservesAcrossManySmallSteps) {
  const PowerTable t;
  EnergyLedger e(1e9);
  RngStream rng(1, "energy");
  double elapsed = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const auto mode = static_cast<RadioMode>(rng.below(4));
    const double dt = static_cast<double>(1 + rng.below(5000)) * 1e-6;
    elapsed += dt;
    if (mode == RadioMode::kTransmit) {
      e.accrue(mode, dt, t, 0.14 + 1.26 * rng.uniform01());
    } else {
      e.accrue(mode, dt, t);
    }
  }
  EXPECT_NEAR(e.accounted_seconds(), elapsed, 1e-6);
  EXPECT_NEAR(e.recomputed(t), e.consumed(), 1e-9);
}

TEST(CompensatedSum, RecoversLostLowOrderBits) {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  EXPECT_DOUBLE_EQ(s.value(), 1000.0);
}
