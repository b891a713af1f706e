#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "manet/harness.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  bool verbose = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Scenario file of key = value lines")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--out", c.out_path, "CSV output file (default: stdout)");
  cmd->add_flag("--verbose,-v", c.verbose, "Echo the effective configuration to stderr");
  cmd->add_option("overrides", c.overrides, "key=value settings applied after --config");
}

manet::ScenarioConfig build_config(const Common& c) {
  manet::ScenarioConfig cfg;
  if (!c.config_path.empty()) manet::load_config_file(cfg, c.config_path);
  for (const auto& o : c.overrides) manet::apply_override(cfg, o);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate_or_throw();
  return cfg;
}

std::ostream& open_out(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty()) return std::cout;
  holder = std::make_unique<std::ofstream>(path);
  if (!*holder) throw std::runtime_error("cannot open " + path);
  return *holder;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event MANET simulator: gossip routing over power-saving 802.11"};
  app.require_subcommand(1);

  Common run_opts;
  std::string trace_path;
  auto* run = app.add_subcommand("run", "Run one scenario and print a CSV row");
  add_common(run, run_opts);
  run->add_option("--trace", trace_path, "Write the event trace to this file");

  Common sweep_opts;
  std::string axis = "sim_time";
  unsigned jobs = 1;
  std::string summary_path;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep over both protocols and traffic types");
  add_common(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "Swept parameter")
      ->check(CLI::IsMember({"sim_time", "nodes"}));
  sweep->add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--summary", summary_path, "Write per-point means and 95% intervals here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = build_config(run_opts);
      if (run_opts.verbose) std::cerr << manet::echo_config(cfg);
      std::unique_ptr<std::ofstream> trace_file;
      if (!trace_path.empty()) {
        trace_file = std::make_unique<std::ofstream>(trace_path);
        if (!*trace_file) throw std::runtime_error("cannot open " + trace_path);
      }
      const auto result = manet::run_one(cfg, trace_file.get());
      if (run_opts.verbose) {
        const auto& st = result.stats;
        std::cerr << "# transmissions=" << st.transmissions << " data=" << st.data_transmissions
                  << " control=" << st.control_transmissions << " collisions=" << st.collisions
                  << " fault_losses=" << st.fault_losses
                  << " tcp_retransmissions=" << st.tcp_retransmissions
                  << " tcp_aborts=" << st.tcp_aborts << " feedback_frames=" << st.feedback_frames
                  << " b_adjustments=" << st.b_adjustments << " mean_source_b="
                  << (st.source_b_samples ? static_cast<double>(st.source_b_sum) /
                                                static_cast<double>(st.source_b_samples)
                                          : 0.0)
                  << '\n';
        for (const auto& [cause, n] : result.row.drops_by_cause) {
          std::cerr << "# drops_" << manet::to_string(cause) << '=' << n << '\n';
        }
      }
      std::unique_ptr<std::ofstream> holder;
      std::ostream& out = open_out(run_opts.out_path, holder);
      out << manet::echo_config(cfg) << manet::kCsvHeader << '\n'
          << manet::to_csv(result.row) << '\n';
      return 0;
    }
    const auto cfg = build_config(sweep_opts);
    if (sweep_opts.verbose) std::cerr << manet::echo_config(cfg);
    manet::SweepOptions opts;
    opts.axis = axis == "nodes" ? manet::SweepAxis::kNodes : manet::SweepAxis::kSimTime;
    opts.jobs = jobs;
    std::unique_ptr<std::ofstream> holder;
    std::ostream& out = open_out(sweep_opts.out_path, holder);
    out << manet::echo_config(cfg);
    const auto outcome = manet::run_sweep(cfg, opts, &out);
    if (!summary_path.empty()) {
      std::ofstream s(summary_path);
      if (!s) throw std::runtime_error("cannot open " + summary_path);
      manet::write_summary(s, outcome.rows);
    }
    if (outcome.failure) {
      std::cerr << "sweep failed: " << *outcome.failure << '\n';
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
