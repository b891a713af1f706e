#include "manet/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace manet {

std::string to_string(Protocol p) { return p == Protocol::kGsp ? "gsp" : "aeerg"; }
std::string to_string(TrafficKind t) { return t == TrafficKind::kCbr ? "cbr" : "tcp"; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    std::size_t pos = 0;
    const auto u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected on/off, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt_double(v[i]);
  }
  return s;
}

struct Field {
  std::function<void(ScenarioConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

template <typename T>
Field number_field(T ScenarioConfig::*member) {
  if constexpr (std::is_floating_point_v<T>) {
    return {[member](ScenarioConfig& c, const std::string& k, const std::string& v) {
              c.*member = parse_double(k, v);
            },
            [member](const ScenarioConfig& c) { return fmt_double(c.*member); }};
  } else {
    return {[member](ScenarioConfig& c, const std::string& k, const std::string& v) {
              c.*member = static_cast<T>(parse_uint(k, v));
            },
            [member](const ScenarioConfig& c) { return std::to_string(c.*member); }};
  }
}

Field bool_field(bool ScenarioConfig::*member) {
  return {[member](ScenarioConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_bool(k, v);
          },
          [member](const ScenarioConfig& c) { return std::string(c.*member ? "on" : "off"); }};
}

Field list_field(std::vector<double> ScenarioConfig::*member) {
  return {[member](ScenarioConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_list(k, v);
          },
          [member](const ScenarioConfig& c) { return fmt_list(c.*member); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ScenarioConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"n_nodes", number_field(&C::n_nodes)},
      {"sim_time_s", number_field(&C::sim_time_s)},
      {"seed", number_field(&C::seed)},
      {"runs_per_point", number_field(&C::runs_per_point)},
      {"warmup_s", number_field(&C::warmup_s)},
      {"area_w_m", number_field(&C::area_w_m)},
      {"area_h_m", number_field(&C::area_h_m)},
      {"speed_mps", number_field(&C::speed_mps)},
      {"pause_s", number_field(&C::pause_s)},
      {"neighbor_tick_s", number_field(&C::neighbor_tick_s)},
      {"range_m", number_field(&C::range_m)},
      {"rate_bps", number_field(&C::rate_bps)},
      {"p_tx_w", number_field(&C::p_tx_w)},
      {"p_rx_w", number_field(&C::p_rx_w)},
      {"p_idle_w", number_field(&C::p_idle_w)},
      {"p_doze_w", number_field(&C::p_doze_w)},
      {"path_loss_alpha", number_field(&C::path_loss_alpha)},
      {"initial_energy_j", number_field(&C::initial_energy_j)},
      {"psm", bool_field(&C::psm)},
      {"beacon_interval_ms", number_field(&C::beacon_interval_ms)},
      {"atim_window_ms", number_field(&C::atim_window_ms)},
      {"mac_retry_max", number_field(&C::mac_retry_max)},
      {"mac_buffer_cap", number_field(&C::mac_buffer_cap)},
      {"collisions", bool_field(&C::collisions)},
      {"mac_jitter_ms", number_field(&C::mac_jitter_ms)},
      {"protocol",
       {[](C& c, const std::string& k, const std::string& v) {
          if (v == "gsp") {
            c.protocol = Protocol::kGsp;
          } else if (v == "aeerg") {
            c.protocol = Protocol::kAeerg;
          } else {
            throw ConfigError("config key '" + k + "': expected gsp|aeerg, got '" + v + "'");
          }
        },
        [](const C& c) { return to_string(c.protocol); }}},
      {"p_gossip", number_field(&C::p_gossip)},
      {"hops_forced", number_field(&C::hops_forced)},
      {"p_sleep", number_field(&C::p_sleep)},
      {"rt", number_field(&C::rt)},
      {"feedback_window_pkts", number_field(&C::feedback_window_pkts)},
      {"feedback_window_s", number_field(&C::feedback_window_s)},
      {"ttl", number_field(&C::ttl)},
      {"traffic",
       {[](C& c, const std::string& k, const std::string& v) {
          if (v == "cbr") {
            c.traffic = TrafficKind::kCbr;
          } else if (v == "tcp") {
            c.traffic = TrafficKind::kTcp;
          } else {
            throw ConfigError("config key '" + k + "': expected cbr|tcp, got '" + v + "'");
          }
        },
        [](const C& c) { return to_string(c.traffic); }}},
      {"cbr_pkt_bytes", number_field(&C::cbr_pkt_bytes)},
      {"cbr_rate_pps", number_field(&C::cbr_rate_pps)},
      {"tcp_window", number_field(&C::tcp_window)},
      {"tcp_rto_min_ms", number_field(&C::tcp_rto_min_ms)},
      {"tcp_rto_max_ms", number_field(&C::tcp_rto_max_ms)},
      {"tcp_max_retx", number_field(&C::tcp_max_retx)},
      {"tcp_app_rate_pps", number_field(&C::tcp_app_rate_pps)},
      {"flows", number_field(&C::flows)},
      {"max_packets_per_flow", number_field(&C::max_packets_per_flow)},
      {"fault_loss", number_field(&C::fault_loss)},
      {"sweep_sim_time_s", list_field(&C::sweep_sim_time_s)},
      {"sweep_nodes", list_field(&C::sweep_nodes)},
      {"sweep_nodes_sim_time_s", number_field(&C::sweep_nodes_sim_time_s)},
  };
  return table;
}

}  // namespace

void ScenarioConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(*this, key, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> ScenarioConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(*this));
  return out;
}

std::vector<std::string> ScenarioConfig::validate() const {
  std::vector<std::string> bad;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  auto probability = [&](double v, const char* key) {
    require(v >= 0.0 && v <= 1.0, std::string(key) + " must lie in [0, 1]");
  };
  require(sim_time_s > 0.0, "sim_time_s must be positive");
  require(warmup_s >= 0.0 && warmup_s < sim_time_s, "warmup_s must lie in [0, sim_time_s)");
  require(runs_per_point > 0, "runs_per_point must be positive");
  require(area_w_m > 0.0, "area_w_m must be positive");
  require(area_h_m > 0.0, "area_h_m must be positive");
  require(speed_mps >= 0.0, "speed_mps must be non-negative");
  require(pause_s >= 0.0, "pause_s must be non-negative");
  require(neighbor_tick_s > 0.0, "neighbor_tick_s must be positive");
  require(range_m > 0.0, "range_m must be positive");
  require(rate_bps > 0, "rate_bps must be positive");
  require(p_tx_w >= p_rx_w && p_rx_w >= p_idle_w && p_idle_w > p_doze_w && p_doze_w >= 0.0,
          "power table must satisfy p_tx_w >= p_rx_w >= p_idle_w > p_doze_w >= 0");
  require(path_loss_alpha > 0.0, "path_loss_alpha must be positive");
  require(initial_energy_j > 0.0, "initial_energy_j must be positive");
  require(beacon_interval_ms >= 1.0, "beacon_interval_ms must be at least 1");
  require(atim_window_ms > 0.0 && atim_window_ms < beacon_interval_ms,
          "atim_window_ms must lie in (0, beacon_interval_ms)");
  require(mac_buffer_cap > 0, "mac_buffer_cap must be positive");
  require(mac_jitter_ms >= 0.0, "mac_jitter_ms must be non-negative");
  probability(p_gossip, "p_gossip");
  probability(p_sleep, "p_sleep");
  probability(rt, "rt");
  probability(fault_loss, "fault_loss");
  require(feedback_window_pkts > 0, "feedback_window_pkts must be positive");
  require(feedback_window_s > 0.0, "feedback_window_s must be positive");
  require(ttl > 0, "ttl must be positive");
  require(cbr_pkt_bytes > 0, "cbr_pkt_bytes must be positive");
  require(cbr_rate_pps > 0.0, "cbr_rate_pps must be positive");
  require(tcp_window > 0, "tcp_window must be positive");
  require(tcp_rto_min_ms > 0.0 && tcp_rto_max_ms >= tcp_rto_min_ms,
          "tcp_rto_min_ms must be positive and not above tcp_rto_max_ms");
  require(tcp_app_rate_pps >= 0.0, "tcp_app_rate_pps must be non-negative");
  auto ascending_positive = [](const std::vector<double>& v) {
    if (v.empty()) return false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) return false;
      if (i > 0 && !(v[i] > v[i - 1])) return false;
    }
    return true;
  };
  require(ascending_positive(sweep_sim_time_s),
          "sweep_sim_time_s must be nonempty, positive and ascending");
  require(ascending_positive(sweep_nodes), "sweep_nodes must be nonempty, positive and ascending");
  require(sweep_nodes_sim_time_s > warmup_s, "sweep_nodes_sim_time_s must exceed warmup_s");
  return bad;
}

void ScenarioConfig::validate_or_throw() const {
  const auto bad = validate();
  if (bad.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& b : bad) msg += "\n  " + b;
  throw ConfigError(msg);
}

void load_config(ScenarioConfig& cfg, std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void load_config_file(ScenarioConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  load_config(cfg, in);
}

void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + assignment);
  cfg.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string echo_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.entries()) out += "# " + k + " = " + v + "\n";
  return out;
}

}  // namespace manet
