#pragma once

#include <vector>

#include "zonoplan/maneuver.hpp"
#include "zonoplan/zonotope.hpp"

namespace zonoplan {

/// Ground-truth obstacle: lane-keeping at constant longitudinal speed.
struct ObstacleState {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  int lane = 0;
  double v = 0.0;       // longitudinal, m/s
  double length = 4.8;
  double width = 2.2;

  Vec2 position_at(double t) const { return {x + v * t, y}; }
  /// Axis-aligned footprint box at time t.
  Zonotope footprint_at(double t) const;
};

/// Per-interval zonotopes covering one obstacle over the planning horizon.
struct ObstaclePrediction {
  int obstacle_id = 0;
  std::vector<Zonotope> slices;
};

/// Constant-velocity sweep prediction: for each interval, the box centered
/// at the midpoint position with a velocity-aligned sweep generator of
/// half-interval travel plus the footprint box. Interval j covers
/// [offset + j*dt, offset + (j+1)*dt] relative to the sensing time.
ObstaclePrediction predict_obstacle(const ObstacleState& state, const PlanTiming& timing,
                                    double offset);

/// Sensor-radius filter per the sensing assumption; obstacles outside are
/// dropped, not an error.
std::vector<ObstacleState> sense_obstacles(const std::vector<ObstacleState>& all,
                                           const Vec2& ego_position, double sensor_radius,
                                           double t);

/// Minimum sensor radius for the configured speeds and footprint:
/// (t_f + t_plan) * (v_ego_max + v_obs_max) + half footprint diagonal.
double required_sensor_radius(const PlanTiming& timing, double v_ego_max, double v_obs_max,
                              double length, double width);

}  // namespace zonoplan
