#include "manet/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace manet {

std::string to_string(DropCause c) {
  switch (c) {
    case DropCause::kTtl: return "ttl";
    case DropCause::kBuffer: return "buffer";
    case DropCause::kRetry: return "retry";
    case DropCause::kIsolated: return "isolated";
    case DropCause::kGossip: return "gossip";
    case DropCause::kChannel: return "channel";
    case DropCause::kEnergy: return "energy";
    case DropCause::kSuppressed: return "suppressed";
  }
  return "unknown";
}

double pdr(const FlowCounters& c) {
  if (c.sent == 0) return 0.0;
  return static_cast<double>(c.received) / static_cast<double>(c.sent);
}

double avg_delay(const FlowCounters& c) {
  if (c.delay_samples == 0) return 0.0;
  return c.delay_sum / static_cast<double>(c.delay_samples);
}

double throughput(const FlowCounters& c, double duration_s) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("throughput: duration must be positive");
  return static_cast<double>(c.bytes_received) * 8.0 / duration_s;
}

std::uint64_t MetricsRow::drops(DropCause c) const {
  auto it = drops_by_cause.find(c);
  return it == drops_by_cause.end() ? 0 : it->second;
}

std::string to_csv(const MetricsRow& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << r.protocol << ',' << r.traffic << ',' << r.nodes << ',' << r.sim_time_s << ',' << r.seed
     << ',' << r.pdr << ',';
  if (r.delay_defined) {
    os << r.avg_delay_ms;
  } else {
    os << "NA";
  }
  os << ',' << r.throughput_bps << ',' << r.energy_j << ',' << r.drops(DropCause::kTtl) << ','
     << r.drops(DropCause::kBuffer) << ',' << r.drops(DropCause::kRetry);
  return os.str();
}

MetricsRow parse_csv_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (f.size() != 12) throw std::invalid_argument("CSV row needs 12 fields: " + line);
  MetricsRow r;
  r.protocol = f[0];
  r.traffic = f[1];
  r.nodes = static_cast<std::uint32_t>(std::stoul(f[2]));
  r.sim_time_s = std::stod(f[3]);
  r.seed = std::stoull(f[4]);
  r.pdr = std::stod(f[5]);
  r.delay_defined = f[6] != "NA";
  r.avg_delay_ms = r.delay_defined ? std::stod(f[6]) : 0.0;
  r.throughput_bps = std::stod(f[7]);
  r.energy_j = std::stod(f[8]);
  r.drops_by_cause[DropCause::kTtl] = std::stoull(f[9]);
  r.drops_by_cause[DropCause::kBuffer] = std::stoull(f[10]);
  r.drops_by_cause[DropCause::kRetry] = std::stoull(f[11]);
  return r;
}

void check_flows(AuditReport& report) {
  for (const auto& f : report.flows) {
    std::uint64_t dropped = 0;
    for (const auto& [cause, n] : f.drops) dropped += n;
    if (f.sent != f.received + f.inflight + dropped) {
      std::ostringstream msg;
      msg << "flow " << f.flow << ": sent " << f.sent << " != received " << f.received
          << " + inflight " << f.inflight << " + dropped " << dropped;
      report.failures.push_back(msg.str());
    }
  }
}

void check_energy(AuditReport& report, double time_tol_s, double joule_tol) {
  for (const auto& e : report.energy) {
    if (std::abs(e.accounted_s - e.elapsed_s) > time_tol_s) {
      std::ostringstream msg;
      msg << std::setprecision(12) << "node " << e.node << ": mode time " << e.accounted_s
          << " s != elapsed " << e.elapsed_s << " s";
      report.failures.push_back(msg.str());
    }
    if (std::abs(e.consumed_j - e.recomputed_j) > joule_tol) {
      std::ostringstream msg;
      msg << std::setprecision(15) << "node " << e.node << ": consumed " << e.consumed_j
          << " J != recomputed " << e.recomputed_j << " J";
      report.failures.push_back(msg.str());
    }
  }
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  boost::math::students_t dist(static_cast<double>(s.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  s.half_width = t * sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

}  // namespace manet
