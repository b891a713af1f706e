#pragma once

#include <cmath>

#include "manet/sim_core.hpp"

namespace manet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Region {
  double width = 600.0;
  double height = 400.0;

  bool contains(Vec2 p) const { return p.x >= 0 && p.x <= width && p.y >= 0 && p.y <= height; }
};

// One random-waypoint leg: depart origin at depart_at, travel at speed to
// waypoint, then hold for pause seconds.
struct MotionState {
  Vec2 origin;
  Vec2 waypoint;
  SimTime depart_at;
  double speed = 0.0;  // m/s
  double pause = 0.0;  // s

  SimTime arrival() const;
  // Earliest time the next leg may start.
  SimTime leg_end() const { return arrival() + SimTime::seconds(pause); }
};

Vec2 position_at(const MotionState& m, SimTime t);

Vec2 uniform_point(RngStream& rng, const Region& r);

// Draws the following leg; origin becomes the old waypoint.
MotionState next_leg(const MotionState& m, RngStream& rng, const Region& r);

// A node's full trajectory. Legs are drawn lazily as queries move forward.
class Trajectory {
 public:
  Trajectory() = default;
  // speed == 0 gives a static node.
  Trajectory(Vec2 start, double speed, double pause, RngStream* rng, Region region);

  // t must be nondecreasing across calls.
  Vec2 position(SimTime t);
  const MotionState& current() const { return leg_; }

 private:
  MotionState leg_;
  SimTime leg_end_{};
  RngStream* rng_ = nullptr;
  Region region_;
};

}  // namespace manet
