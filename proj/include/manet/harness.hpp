#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "manet/config.hpp"
#include "manet/metrics.hpp"
#include "manet/network.hpp"

namespace manet {

struct RunResult {
  MetricsRow row;
  AuditReport audit;
  NetworkStats stats;
};

// One scenario: random placement, flows between disjoint random pairs.
// Throws ReconcileError if the end-of-run audit fails.
RunResult run_one(const ScenarioConfig& cfg, std::ostream* trace = nullptr);
// Same run, leaving the audit for the caller to inspect.
RunResult run_unchecked(const ScenarioConfig& cfg, std::ostream* trace = nullptr);

enum class SweepAxis : std::uint8_t { kSimTime, kNodes };

struct SweepOptions {
  SweepAxis axis = SweepAxis::kSimTime;
  unsigned jobs = 1;
  std::vector<Protocol> protocols{Protocol::kGsp, Protocol::kAeerg};
  std::vector<TrafficKind> traffic{TrafficKind::kCbr, TrafficKind::kTcp};
};

// Every run of a sweep in output order: axis value, protocol, traffic, seed.
std::vector<ScenarioConfig> sweep_plan(const ScenarioConfig& base, const SweepOptions& opts);

struct SweepOutcome {
  std::vector<MetricsRow> rows;
  std::optional<std::string> failure;
};

// Runs the plan, writing the CSV header and rows to `csv` (when given) in plan
// order. A failing run stops the sweep; rows finished before it are kept and
// a "# FAILED" line records the error.
SweepOutcome run_sweep(const ScenarioConfig& base, const SweepOptions& opts, std::ostream* csv);

// Mean and 95% interval per (protocol, traffic, nodes, sim_time) point.
void write_summary(std::ostream& out, const std::vector<MetricsRow>& rows);

// Exact two-sided sign test on paired samples; ties are dropped.
struct SignTest {
  std::size_t greater = 0;  // pairs with a > b
  std::size_t less = 0;
  std::size_t ties = 0;
  double p_value = 1.0;
};
SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace manet
