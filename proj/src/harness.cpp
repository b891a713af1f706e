#include "manet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

namespace manet {

RunResult run_unchecked(const ScenarioConfig& cfg, std::ostream* trace) {
  cfg.validate_or_throw();
  Simulator sim(cfg.seed);
  sim.set_trace(trace);
  Network net(cfg, sim);
  net.start();

  RngStream& rng = sim.stream("traffic");
  std::vector<NodeId> ids(net.size());
  std::iota(ids.begin(), ids.end(), NodeId{0});
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::swap(ids[i - 1], ids[rng.below(i)]);
  }
  const std::size_t flows = std::min<std::size_t>(cfg.flows, ids.size() / 2);
  // Sources stop one tick before the end, so a flow of length L at rate r
  // emits exactly L * r originals.
  const SimTime end = SimTime::seconds(cfg.sim_time_s);
  const SimTime stop = end - SimTime::us(1);
  for (std::size_t f = 0; f < flows; ++f) {
    const SimTime start = SimTime::us(rng.below(1'000'000));
    if (cfg.traffic == TrafficKind::kCbr) {
      net.add_cbr_flow(ids[2 * f], ids[2 * f + 1], start, stop);
    } else {
      net.add_tcp_flow(ids[2 * f], ids[2 * f + 1], start, stop);
    }
  }

  sim.run(end);
  net.finish();

  return RunResult{net.metrics_row(), net.audit(), net.stats()};
}

RunResult run_one(const ScenarioConfig& cfg, std::ostream* trace) {
  RunResult r = run_unchecked(cfg, trace);
  if (!r.audit.ok()) {
    std::ostringstream msg;
    msg << "audit failed (seed " << cfg.seed << "):";
    for (const auto& f : r.audit.failures) msg << ' ' << f << ';';
    throw ReconcileError(msg.str());
  }
  return r;
}

std::vector<ScenarioConfig> sweep_plan(const ScenarioConfig& base, const SweepOptions& opts) {
  std::vector<ScenarioConfig> plan;
  auto add_point = [&](ScenarioConfig point) {
    for (Protocol p : opts.protocols) {
      for (TrafficKind t : opts.traffic) {
        for (std::uint32_t run = 0; run < base.runs_per_point; ++run) {
          ScenarioConfig c = point;
          c.protocol = p;
          c.traffic = t;
          c.seed = base.seed + run;
          plan.push_back(c);
        }
      }
    }
  };
  if (opts.axis == SweepAxis::kSimTime) {
    for (double t : base.sweep_sim_time_s) {
      ScenarioConfig c = base;
      c.sim_time_s = t;
      add_point(c);
    }
  } else {
    for (std::uint32_t n : base.sweep_nodes) {
      ScenarioConfig c = base;
      c.n_nodes = n;
      c.sim_time_s = base.sweep_nodes_sim_time_s;
      add_point(c);
    }
  }
  return plan;
}

SweepOutcome run_sweep(const ScenarioConfig& base, const SweepOptions& opts, std::ostream* csv) {
  const auto plan = sweep_plan(base, opts);
  std::vector<std::optional<MetricsRow>> done(plan.size());
  std::vector<std::string> errors(plan.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex out_mu;
  std::size_t written = 0;
  SweepOutcome outcome;

  if (csv) *csv << kCsvHeader << '\n';

  // Rows are written as soon as every earlier run has finished.
  auto flush_ready = [&] {
    while (written < plan.size() && done[written]) {
      if (csv) *csv << to_csv(*done[written]) << '\n';
      outcome.rows.push_back(*done[written]);
      ++written;
    }
    if (csv) csv->flush();
  };

  auto worker = [&] {
    for (;;) {
      if (stop) return;
      const std::size_t i = next++;
      if (i >= plan.size()) return;
      try {
        MetricsRow row = run_one(plan[i]).row;
        std::lock_guard lock(out_mu);
        done[i] = std::move(row);
        flush_ready();
      } catch (const std::exception& e) {
        std::lock_guard lock(out_mu);
        errors[i] = e.what();
        stop = true;
      }
    }
  };

  const unsigned jobs = std::max(1u, opts.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  flush_ready();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!errors[i].empty()) {
      const auto& c = plan[i];
      std::ostringstream msg;
      msg << to_string(c.protocol) << ' ' << to_string(c.traffic) << " nodes=" << c.n_nodes
          << " sim_time_s=" << c.sim_time_s << " seed=" << c.seed << ": " << errors[i];
      outcome.failure = msg.str();
      if (csv) *csv << "# FAILED " << *outcome.failure << '\n' << std::flush;
      break;
    }
  }
  return outcome;
}

void write_summary(std::ostream& out, const std::vector<MetricsRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::uint32_t, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const MetricsRow*>> groups;
  for (const auto& r : rows) {
    Key k{r.protocol, r.traffic, r.nodes, r.sim_time_s};
    if (!groups.contains(k)) order.push_back(k);
    groups[k].push_back(&r);
  }
  out << "protocol,traffic,nodes,sim_time_s,runs,pdr_mean,pdr_ci95,avg_delay_ms_mean,"
         "avg_delay_ms_ci95,throughput_bps_mean,throughput_bps_ci95,energy_j_mean,energy_j_ci95\n";
  for (const auto& k : order) {
    const auto& g = groups[k];
    auto stat = [&](auto field) {
      std::vector<double> v;
      for (const MetricsRow* r : g) {
        if (auto x = field(*r)) v.push_back(*x);
      }
      return summarize(v);
    };
    const Summary pdr_s = stat([](const MetricsRow& r) { return std::optional(r.pdr); });
    const Summary delay_s = stat([](const MetricsRow& r) {
      return r.delay_defined ? std::optional(r.avg_delay_ms) : std::nullopt;
    });
    const Summary thr_s = stat([](const MetricsRow& r) { return std::optional(r.throughput_bps); });
    const Summary en_s = stat([](const MetricsRow& r) { return std::optional(r.energy_j); });
    out << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ','
        << std::get<3>(k) << ',' << g.size();
    for (const Summary& s : {pdr_s, delay_s, thr_s, en_s}) {
      if (s.n == 0) {
        out << ",NA,NA";
      } else {
        out << ',' << s.mean << ',' << s.half_width;
      }
    }
    out << '\n';
  }
}

SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sign_test needs paired samples");
  SignTest t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) {
      ++t.greater;
    } else if (a[i] < b[i]) {
      ++t.less;
    } else {
      ++t.ties;
    }
  }
  const std::size_t n = t.greater + t.less;
  if (n == 0) return t;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  const double k = static_cast<double>(std::min(t.greater, t.less));
  t.p_value = std::min(1.0, 2.0 * boost::math::cdf(dist, k));
  return t;
}

}  // namespace manet
