#include <gtest/gtest.h>

#include <sstream>

#include "manet/harness.hpp"

using namespace manet;

TEST(Sweep, PlanSizes) {
  ScenarioConfig base;
  SweepOptions opts;
  EXPECT_EQ(sweep_plan(base, opts).size(), 6u * 2 * 2 * 10);
  base.sweep_sim_time_s = {25, 50, 100, 150, 200};
  EXPECT_EQ(sweep_plan(base, opts).size(), 200u);
  opts.axis = SweepAxis::kNodes;
  EXPECT_EQ(sweep_plan(base, opts).size(), 400u);
}

TEST(Sweep, PlanOrderAndSeeds) {
  ScenarioConfig base;
  base.seed = 100;
  base.runs_per_point = 2;
  base.sweep_nodes = {10, 20};
  base.sweep_nodes_sim_time_s = 30;
  SweepOptions opts;
  opts.axis = SweepAxis::kNodes;
  const auto plan = sweep_plan(base, opts);
  ASSERT_EQ(plan.size(), 16u);
  EXPECT_EQ(plan[0].n_nodes, 10u);
  EXPECT_EQ(plan[0].protocol, Protocol::kGsp);
  EXPECT_EQ(plan[0].traffic, TrafficKind::kCbr);
  EXPECT_EQ(plan[0].seed, 100u);
  EXPECT_EQ(plan[1].seed, 101u);
  EXPECT_EQ(plan[2].traffic, TrafficKind::kTcp);
  EXPECT_EQ(plan[4].protocol, Protocol::kAeerg);
  EXPECT_EQ(plan[8].n_nodes, 20u);
  for (const auto& c : plan) EXPECT_EQ(c.sim_time_s, 30.0);
}

TEST(Sweep, ParallelOutputMatchesSerial) {
  ScenarioConfig base;
  base.runs_per_point = 2;
  base.sweep_sim_time_s = {8, 12};
  SweepOptions opts;
  std::ostringstream serial, parallel;
  const auto a = run_sweep(base, opts, &serial);
  opts.jobs = 3;
  const auto b = run_sweep(base, opts, &parallel);
  EXPECT_FALSE(a.failure);
  EXPECT_EQ(a.rows.size(), 16u);
  EXPECT_EQ(serial.str(), parallel.str());
  EXPECT_EQ(serial.str().rfind(kCsvHeader, 0), 0u);
}

TEST(Summary, GroupsPointsWithHandCheckedInterval) {
  std::vector<MetricsRow> rows(3);
  const double pdrs[] = {0.5, 0.6, 0.7};
  for (int i = 0; i < 3; ++i) {
    rows[i].protocol = "gsp";
    rows[i].traffic = "cbr";
    rows[i].nodes = 50;
    rows[i].sim_time_s = 100;
    rows[i].seed = static_cast<std::uint64_t>(i + 1);
    rows[i].pdr = pdrs[i];
  }
  std::ostringstream out;
  write_summary(out, rows);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  // mean 0.6, sd 0.1, t(0.975, 2) = 4.302652729749464, half width 0.248413...
  EXPECT_EQ(line.rfind("gsp,cbr,50,100,3,0.6,0.2484", 0), 0u) << line;
  EXPECT_NE(line.find(",NA,NA,"), std::string::npos);  // no delay samples
}

TEST(SignTestStats, ExactBinomial) {
  std::vector<double> a(10, 1.0), b(10, 0.0);
  auto t = sign_test(a, b);
  EXPECT_EQ(t.greater, 10u);
  EXPECT_NEAR(t.p_value, 2.0 / 1024.0, 1e-15);
  b[0] = 2.0;
  t = sign_test(a, b);
  EXPECT_NEAR(t.p_value, 2.0 * 11.0 / 1024.0, 1e-15);
  b[1] = 1.0;  // tie is dropped: 8 vs 1 out of 9
  t = sign_test(a, b);
  EXPECT_EQ(t.ties, 1u);
  EXPECT_NEAR(t.p_value, 2.0 * 10.0 / 512.0, 1e-15);
  EXPECT_EQ(sign_test({1.0}, {1.0}).p_value, 1.0);
  EXPECT_THROW(sign_test({1.0}, {}), std::invalid_argument);
}
