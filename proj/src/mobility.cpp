#include "manet/mobility.hpp"

#include <algorithm>
#include <limits>

namespace manet {

SimTime MotionState::arrival() const {
  const double d = distance(origin, waypoint);
  if (d == 0.0) return depart_at;
  if (speed <= 0.0) return SimTime::us(std::numeric_limits<std::uint64_t>::max() / 2);
  return depart_at + SimTime::seconds(d / speed);
}

Vec2 position_at(const MotionState& m, SimTime t) {
  if (t <= m.depart_at || m.speed <= 0.0) return m.origin;
  const double d = distance(m.origin, m.waypoint);
  if (d == 0.0) return m.origin;
  const double travelled = m.speed * (t - m.depart_at).to_seconds();
  if (travelled >= d) return m.waypoint;
  const double f = travelled / d;
  return Vec2{m.origin.x + f * (m.waypoint.x - m.origin.x),
              m.origin.y + f * (m.waypoint.y - m.origin.y)};
}

Vec2 uniform_point(RngStream& rng, const Region& r) {
  const double x = rng.uniform01() * r.width;
  const double y = rng.uniform01() * r.height;
  return Vec2{x, y};
}

MotionState next_leg(const MotionState& m, RngStream& rng, const Region& r) {
  MotionState n;
  n.origin = m.waypoint;
  n.waypoint = uniform_point(rng, r);
  n.depart_at = m.leg_end();
  n.speed = m.speed;
  n.pause = m.pause;
  return n;
}

Trajectory::Trajectory(Vec2 start, double speed, double pause, RngStream* rng, Region region)
    : rng_(rng), region_(region) {
  leg_.origin = start;
  leg_.waypoint = start;
  leg_.depart_at = SimTime{};
  leg_.speed = speed;
  leg_.pause = pause;
  if (speed > 0.0 && rng_ != nullptr) {
    // First leg departs immediately.
    leg_.waypoint = uniform_point(*rng_, region_);
  }
  leg_end_ = leg_.leg_end();
}

Vec2 Trajectory::position(SimTime t) {
  if (leg_.speed > 0.0 && rng_ != nullptr) {
    while (t >= leg_end_) {
      leg_ = next_leg(leg_, *rng_, region_);
      leg_end_ = leg_.leg_end();
    }
  }
  return position_at(leg_, t);
}

}  // namespace manet
