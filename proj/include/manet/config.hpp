#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "manet/routing.hpp"

namespace manet {

enum class TrafficKind : std::uint8_t { kCbr, kTcp };

std::string to_string(Protocol p);
std::string to_string(TrafficKind t);

// Every tunable of a scenario. Defaults reproduce the base setup: 50 nodes in
// 600 x 400 m, 250 m range, 2 Mb/s, 20 m/s with 10 s pauses.
struct ScenarioConfig {
  // run
  std::uint32_t n_nodes = 50;
  double sim_time_s = 100.0;
  std::uint64_t seed = 1;
  std::uint32_t runs_per_point = 10;
  double warmup_s = 5.0;

  // mobility
  double area_w_m = 600.0;
  double area_h_m = 400.0;
  double speed_mps = 20.0;
  double pause_s = 10.0;
  double neighbor_tick_s = 1.0;

  // radio / energy
  double range_m = 250.0;
  std::uint64_t rate_bps = 2'000'000;
  double p_tx_w = 1.4;
  double p_rx_w = 1.0;
  double p_idle_w = 0.7;
  double p_doze_w = 0.045;
  double path_loss_alpha = 2.0;
  double initial_energy_j = 1000.0;

  // mac
  bool psm = true;
  double beacon_interval_ms = 100.0;
  double atim_window_ms = 20.0;
  std::uint32_t mac_retry_max = 4;
  std::uint32_t mac_buffer_cap = 64;
  bool collisions = false;
  double mac_jitter_ms = 10.0;

  // routing
  Protocol protocol = Protocol::kGsp;
  double p_gossip = 0.7;
  std::uint32_t hops_forced = 1;
  double p_sleep = 0.5;
  double rt = 0.9;
  std::uint32_t feedback_window_pkts = 20;
  double feedback_window_s = 2.0;
  std::uint32_t ttl = 32;

  // traffic
  TrafficKind traffic = TrafficKind::kCbr;
  std::uint32_t cbr_pkt_bytes = 512;
  double cbr_rate_pps = 4.0;
  std::uint32_t tcp_window = 8;
  double tcp_rto_min_ms = 1000.0;
  double tcp_rto_max_ms = 32000.0;
  std::uint32_t tcp_max_retx = 8;
  // 0 means a greedy sender; otherwise packets/s offered by the application.
  double tcp_app_rate_pps = 4.0;
  std::uint32_t flows = 10;
  // Caps originals per flow; 0 = unlimited.
  std::uint64_t max_packets_per_flow = 0;

  // fault injection: independent per-reception loss of data-plane frames
  double fault_loss = 0.0;

  // sweeps
  std::vector<double> sweep_sim_time_s{25, 50, 75, 100, 150, 200};
  std::vector<double> sweep_nodes{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  // sim_time used at every point of the node-count sweep
  double sweep_nodes_sim_time_s = 100.0;

  // Sets one key from its textual value. Throws ConfigError on unknown keys
  // or malformed values.
  void set(const std::string& key, const std::string& value);
  // Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  // All validation failures, one message per bad key. Empty when valid.
  std::vector<std::string> validate() const;
  void validate_or_throw() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" text with '#' comments.
void load_config(ScenarioConfig& cfg, std::istream& in);
void load_config_file(ScenarioConfig& cfg, const std::string& path);
// "key=value" override as given on the command line.
void apply_override(ScenarioConfig& cfg, const std::string& assignment);

// Comment lines ("# key = value") describing the effective configuration.
std::string echo_config(const ScenarioConfig& cfg);

}  // namespace manet
