#include "manet/radio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace manet {

std::string_view to_string(RadioMode m) {
  switch (m) {
    case RadioMode::kTransmit: return "transmit";
    case RadioMode::kReceive: return "receive";
    case RadioMode::kIdle: return "idle";
    case RadioMode::kDoze: return "doze";
  }
  return "unknown";
}

double PowerTable::operator[](RadioMode m) const {
  switch (m) {
    case RadioMode::kTransmit: return p_tx;
    case RadioMode::kReceive: return p_rx;
    case RadioMode::kIdle: return p_idle;
    case RadioMode::kDoze: return p_doze;
  }
  return 0.0;
}

bool PowerTable::valid() const {
  return p_tx >= p_rx && p_rx >= p_idle && p_idle > p_doze && p_doze >= 0.0;
}

bool in_range(Vec2 a, Vec2 b, double range_m) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy <= range_m * range_m;
}

SimTime tx_duration(std::uint64_t payload_bytes, std::uint64_t rate_bps) {
  if (rate_bps == 0) throw std::invalid_argument("rate_bps must be positive");
  const std::uint64_t bits_us = payload_bytes * 8 * 1'000'000;
  return SimTime::us((bits_us + rate_bps - 1) / rate_bps);
}

double tx_power_for_distance(double d, double range_m, const PowerTable& table,
                             const PathLoss& law) {
  if (!(d >= 0.0) || d > range_m) {
    throw std::invalid_argument("tx_power_for_distance: distance outside transmission range");
  }
  const double scaled = table.p_tx * std::pow(d / range_m, law.alpha);
  return std::clamp(scaled, law.floor_fraction * table.p_tx, table.p_tx);
}

double reach_for_power(double power_w, double range_m, const PowerTable& table,
                       const PathLoss& law) {
  if (power_w >= table.p_tx) return range_m;
  return range_m * std::pow(power_w / table.p_tx, 1.0 / law.alpha);
}

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

void EnergyLedger::accrue(RadioMode mode, double dt, const PowerTable& table,
                          std::optional<double> power_override) {
  if (dt < 0.0) throw std::invalid_argument("EnergyLedger::accrue: negative dt");
  if (dt == 0.0) return;
  if (dead_) {
    dead_seconds_.add(dt);
    return;
  }
  const double power = power_override.value_or(table[mode]);
  const auto idx = static_cast<std::size_t>(mode);
  const double cost = dt * power;
  if (power > 0.0 && cost >= residual_) {
    const double alive = residual_ / power;
    seconds_[idx].add(alive);
    joules_[idx].add(residual_);
    consumed_.add(residual_);
    dead_seconds_.add(dt - alive);
    death_offset_ = alive;
    residual_ = 0.0;
    dead_ = true;
    return;
  }
  seconds_[idx].add(dt);
  joules_[idx].add(cost);
  consumed_.add(cost);
  residual_ = initial_ - consumed_.value();
}

double EnergyLedger::accounted_seconds() const {
  CompensatedSum s;
  for (const auto& m : seconds_) s.add(m.value());
  s.add(dead_seconds_.value());
  return s.value();
}

double EnergyLedger::recomputed(const PowerTable& table) const {
  CompensatedSum s;
  s.add(joules_[static_cast<std::size_t>(RadioMode::kTransmit)].value());
  for (RadioMode m : {RadioMode::kReceive, RadioMode::kIdle, RadioMode::kDoze}) {
    s.add(mode_seconds(m) * table[m]);
  }
  return s.value();
}

}  // namespace manet
