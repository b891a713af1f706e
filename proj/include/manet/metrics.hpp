#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "manet/sim_core.hpp"

namespace manet {

// Per-original drop causes. Only ttl, buffer and retry get CSV columns; the
// others still take part in reconciliation.
enum class DropCause : std::uint8_t {
  kTtl,
  kBuffer,
  kRetry,
  kIsolated,
  kGossip,
  kChannel,
  kEnergy,
  kSuppressed,
};
inline constexpr std::size_t kDropCauses = 8;

std::string to_string(DropCause c);

struct FlowCounters {
  std::uint64_t sent = 0;      // application originals
  std::uint64_t received = 0;  // deduplicated deliveries
  double delay_sum = 0.0;      // seconds, over measured deliveries
  std::uint64_t delay_samples = 0;
  std::uint64_t bytes_received = 0;  // measured deliveries only
};

double pdr(const FlowCounters& c);
// Mean delay in seconds over measured deliveries; 0 when there are none.
double avg_delay(const FlowCounters& c);
// bits/s. Throws std::invalid_argument for a non-positive duration.
double throughput(const FlowCounters& c, double duration_s);

struct MetricsRow {
  std::string protocol;
  std::string traffic;
  std::uint32_t nodes = 0;
  double sim_time_s = 0.0;
  std::uint64_t seed = 0;
  double pdr = 0.0;
  double avg_delay_ms = 0.0;
  bool delay_defined = false;
  double throughput_bps = 0.0;
  double energy_j = 0.0;
  std::map<DropCause, std::uint64_t> drops_by_cause;

  std::uint64_t drops(DropCause c) const;
};

inline constexpr const char* kCsvHeader =
    "protocol,traffic,nodes,sim_time_s,seed,pdr,avg_delay_ms,throughput_bps,energy_j,drops_ttl,"
    "drops_buffer,drops_retry";

// One CSV line without trailing newline. An undefined delay prints as "NA".
std::string to_csv(const MetricsRow& row);
MetricsRow parse_csv_row(const std::string& line);

struct FlowAudit {
  std::uint32_t flow = 0;
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t inflight = 0;
  std::map<DropCause, std::uint64_t> drops;
};

struct EnergyAudit {
  NodeId node = 0;
  double accounted_s = 0.0;
  double elapsed_s = 0.0;
  double consumed_j = 0.0;
  double recomputed_j = 0.0;
};

struct AuditReport {
  std::vector<FlowAudit> flows;
  std::vector<EnergyAudit> energy;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

// Checks sent = received + inflight + drops per flow, and per-node energy
// conservation within the given tolerances. Failures are collected, not thrown.
void check_flows(AuditReport& report);
void check_energy(AuditReport& report, double time_tol_s = 1e-6, double joule_tol = 1e-9);

class ReconcileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Summary statistics over seeds for one sweep point.
struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double half_width = 0.0;  // 95% two-sided Student-t half width
};

Summary summarize(const std::vector<double>& values);

}  // namespace manet
