#pragma once

#include "zonoplan/vec2.hpp"

namespace zonoplan {

/// Planning-horizon timing. dt must divide t_f exactly; the driving phase
/// spans [0, t_m) and the contingency braking phase [t_m, t_f].
struct PlanTiming {
  double dt = 0.1;
  double t_f = 3.0;
  double t_m = 1.5;
  double t_plan = 0.35;

  int interval_count() const;
  double interval_start(int j) const { return j * dt; }
  double interval_mid(int j) const { return (j + 0.5) * dt; }
  double interval_end(int j) const { return (j + 1) * dt; }
};

/// World-frame vehicle state. Heading in radians, speed in m/s.
struct EgoState {
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;
  double v = 0.0;

  Vec2 position() const { return {x, y}; }
};

struct BodyState {
  Vec2 pos;
  double heading = 0.0;
  double speed = 0.0;
};

/// Parameterized maneuver family executed by the ego vehicle. The driving
/// phase ramps the longitudinal speed linearly from v0 to p.x and completes
/// a smoothstep lateral shift of p.y; the braking phase decays the
/// longitudinal speed as (1-s)^5 so the vehicle is stopped at t_f with
/// per-interval travel shrinking below micrometers by the final interval.
///
/// Positions are exactly affine in (v0, p), which the reachable-set fit
/// relies on. States are frozen at their t_f values for tau > t_f.
BodyState maneuver_body_state(double v0, Vec2 p, const PlanTiming& timing, double tau);

/// Body state mapped through the plan-start pose (rotation by z0.h plus
/// translation); the initial speed is taken from z0.v.
EgoState maneuver_world_state(const EgoState& z0, Vec2 p, const PlanTiming& timing, double tau);

/// Gradient of the world-frame position at time tau with respect to the
/// trajectory parameter (columns d/dp.x, d/dp.y). Exact: the family is
/// affine in p.
Mat2 maneuver_position_jacobian(const EgoState& z0, const PlanTiming& timing, double tau);

}  // namespace zonoplan
