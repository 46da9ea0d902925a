#include "zonoplan/obstacles.hpp"

#include <cmath>

namespace zonoplan {

Zonotope ObstacleState::footprint_at(double t) const {
  const Vec2 c = position_at(t);
  return Zonotope(c, {{length / 2.0, 0.0}, {0.0, width / 2.0}});
}

ObstaclePrediction predict_obstacle(const ObstacleState& state, const PlanTiming& timing,
                                    double offset) {
  ObstaclePrediction pred;
  pred.obstacle_id = state.id;
  const int n = timing.interval_count();
  pred.slices.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double t_mid = offset + timing.interval_mid(j);
    const Vec2 c = state.position_at(t_mid);
    std::vector<Vec2> gens = {{state.length / 2.0, 0.0}, {0.0, state.width / 2.0}};
    const double sweep = std::abs(state.v) * timing.dt / 2.0;
    if (sweep > 0.0) gens.push_back({sweep, 0.0});
    pred.slices.emplace_back(c, std::move(gens));
  }
  return pred;
}

std::vector<ObstacleState> sense_obstacles(const std::vector<ObstacleState>& all,
                                           const Vec2& ego_position, double sensor_radius,
                                           double t) {
  std::vector<ObstacleState> sensed;
  for (const ObstacleState& o : all) {
    if ((o.position_at(t) - ego_position).norm() <= sensor_radius) sensed.push_back(o);
  }
  return sensed;
}

double required_sensor_radius(const PlanTiming& timing, double v_ego_max, double v_obs_max,
                              double length, double width) {
  return (timing.t_f + timing.t_plan) * (v_ego_max + v_obs_max) +
         0.5 * std::hypot(length, width);
}

}  // namespace zonoplan
