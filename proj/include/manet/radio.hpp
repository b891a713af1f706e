#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "manet/mobility.hpp"
#include "manet/sim_core.hpp"

namespace manet {

enum class RadioMode : std::uint8_t { kTransmit = 0, kReceive = 1, kIdle = 2, kDoze = 3 };
inline constexpr std::size_t kRadioModes = 4;

std::string_view to_string(RadioMode m);

struct PowerTable {
  double p_tx = 1.4;
  double p_rx = 1.0;
  double p_idle = 0.7;
  double p_doze = 0.045;

  double operator[](RadioMode m) const;
  // p_tx >= p_rx >= p_idle > p_doze >= 0
  bool valid() const;
};

// Unit-disk reachability, boundary inclusive.
bool in_range(Vec2 a, Vec2 b, double range_m);

// Airtime in whole microseconds, rounded up.
SimTime tx_duration(std::uint64_t payload_bytes, std::uint64_t rate_bps);

struct PathLoss {
  double alpha = 2.0;
  double floor_fraction = 0.1;
};

// Power needed to cover distance d: p_tx * (d / range)^alpha, floored.
// Throws std::invalid_argument when d lies outside [0, range].
double tx_power_for_distance(double d, double range_m, const PowerTable& table,
                             const PathLoss& law = {});

// Distance covered by a transmission at the given power; inverse of the law above.
double reach_for_power(double power_w, double range_m, const PowerTable& table,
                       const PathLoss& law = {});

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class EnergyLedger {
 public:
  EnergyLedger() = default;
  explicit EnergyLedger(double initial_j) : initial_(initial_j), residual_(initial_j) {}

  // Charges dt seconds in mode. power_override replaces the table entry
  // (used for distance-scaled transmissions). Time past depletion is booked
  // as dead time and costs nothing.
  void accrue(RadioMode mode, double dt, const PowerTable& table,
              std::optional<double> power_override = std::nullopt);

  double mode_seconds(RadioMode m) const { return seconds_[static_cast<std::size_t>(m)].value(); }
  double mode_joules(RadioMode m) const { return joules_[static_cast<std::size_t>(m)].value(); }
  double dead_seconds() const { return dead_seconds_.value(); }
  // Alive plus dead time; equals elapsed simulated time once settled.
  double accounted_seconds() const;
  double consumed() const { return consumed_.value(); }
  double residual() const { return residual_; }
  double initial() const { return initial_; }
  bool dead() const { return dead_; }
  // Seconds into the fatal accrue call at which the battery ran out.
  std::optional<double> death_offset() const { return death_offset_; }

  // Consumption rebuilt from per-mode time and power. Transmit uses the booked
  // joules because its power varies with distance.
  double recomputed(const PowerTable& table) const;

 private:
  double initial_ = 1000.0;
  double residual_ = 1000.0;
  bool dead_ = false;
  std::optional<double> death_offset_;
  std::array<CompensatedSum, kRadioModes> seconds_{};
  std::array<CompensatedSum, kRadioModes> joules_{};
  CompensatedSum dead_seconds_;
  CompensatedSum consumed_;
};

}  // namespace manet
