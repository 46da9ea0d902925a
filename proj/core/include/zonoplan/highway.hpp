#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zonoplan/maneuver.hpp"
#include "zonoplan/obstacles.hpp"

namespace zonoplan {

struct HighwayConfig {
  double length = 1000.0;
  int lane_count = 3;
  double lane_width = 3.7;

  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
  double total_width() const { return lane_count * lane_width; }
  int lane_of(double y) const;
};

struct ScenarioConfig {
  HighwayConfig highway;
  int max_moving = 15;
  int min_moving = 5;
  int max_static = 3;
  double obstacle_speed_lo = 15.0;  // paper gives no range; recorded default
  double obstacle_speed_hi = 25.0;
  double spawn_x_lo = 60.0;
  double spawn_x_hi = 950.0;
  double spawn_gap = 18.0;          // same-lane longitudinal spawn separation
  double ego_clear_ahead = 40.0;
  EgoFootprint obstacle_footprint;
  // bench mode: exactly this many moving obstacles within bench_range ahead
  int fixed_obstacle_count = -1;
  double bench_range = 200.0;
};

struct Scenario {
  std::uint64_t seed = 0;
  HighwayConfig highway;
  EgoState ego_start;
  std::vector<ObstacleState> obstacles;
  double goal_x = 1000.0;
};

/// Deterministic scenario from a seed: ego starts stopped in the middle
/// lane; obstacles spawn in lanes without initial overlap.
Scenario generate_scenario(std::uint64_t seed, const ScenarioConfig& config);

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace zonoplan
