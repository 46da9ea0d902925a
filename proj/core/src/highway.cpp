#include "zonoplan/highway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "zonoplan/random.hpp"

namespace zonoplan {

int HighwayConfig::lane_of(double y) const {
  const int lane = static_cast<int>(std::floor(y / lane_width));
  return std::clamp(lane, 0, lane_count - 1);
}

namespace {

bool spawn_conflicts(const std::vector<ObstacleState>& placed, int lane, double x, double gap) {
  for (const ObstacleState& o : placed) {
    if (o.lane == lane && std::abs(o.x - x) < gap) return true;
  }
  return false;
}

}  // namespace

Scenario generate_scenario(std::uint64_t seed, const ScenarioConfig& config) {
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  Scenario s;
  s.seed = seed;
  s.highway = config.highway;
  s.goal_x = config.highway.length;

  s.ego_start = {0.0, config.highway.lane_center(config.highway.lane_count / 2), 0.0, 0.0};

  const bool bench = config.fixed_obstacle_count >= 0;
  const int n_moving = bench ? config.fixed_obstacle_count
                             : rng.uniform_int(config.min_moving, config.max_moving);
  const int n_static = bench ? 0 : rng.uniform_int(0, config.max_static);

  const double x_lo = config.spawn_x_lo;
  const double x_hi = bench ? std::min(config.spawn_x_lo + config.bench_range,
                                       config.highway.length)
                            : config.spawn_x_hi;

  int id = 0;
  auto place = [&](bool moving) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const int lane = rng.uniform_int(0, config.highway.lane_count - 1);
      const double x = rng.uniform(x_lo, x_hi);
      if (spawn_conflicts(s.obstacles, lane, x, config.spawn_gap)) continue;
      if (lane == s.highway.lane_of(s.ego_start.y) &&
          x < s.ego_start.x + config.ego_clear_ahead) {
        continue;
      }
      ObstacleState o;
      o.id = id++;
      o.lane = lane;
      o.x = x;
      o.y = config.highway.lane_center(lane);
      o.v = moving ? rng.uniform(config.obstacle_speed_lo, config.obstacle_speed_hi) : 0.0;
      o.length = config.obstacle_footprint.length;
      o.width = config.obstacle_footprint.width;
      s.obstacles.push_back(o);
      return;
    }
    // dense draws can run out of room; skip rather than fail
  };

  for (int i = 0; i < n_moving; ++i) place(true);
  for (int i = 0; i < n_static; ++i) place(false);
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["highway"] = {{"length", s.highway.length},
                  {"lanes", s.highway.lane_count},
                  {"lane_width", s.highway.lane_width}};
  j["goal_x"] = s.goal_x;
  j["ego"] = {{"x", s.ego_start.x}, {"y", s.ego_start.y}, {"h", s.ego_start.h},
              {"v", s.ego_start.v}};
  auto& obs = j["obstacles"] = nlohmann::json::array();
  for (const ObstacleState& o : s.obstacles) {
    obs.push_back({{"id", o.id}, {"x", o.x}, {"y", o.y}, {"lane", o.lane}, {"v", o.v},
                   {"l", o.length}, {"w", o.width}});
  }
  return j.dump(1);
}

Scenario scenario_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Scenario s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.highway.length = j.at("highway").at("length").get<double>();
  s.highway.lane_count = j.at("highway").at("lanes").get<int>();
  s.highway.lane_width = j.at("highway").at("lane_width").get<double>();
  s.goal_x = j.at("goal_x").get<double>();
  s.ego_start = {j.at("ego").at("x").get<double>(), j.at("ego").at("y").get<double>(),
                 j.at("ego").at("h").get<double>(), j.at("ego").at("v").get<double>()};
  for (const auto& o : j.at("obstacles")) {
    ObstacleState os;
    os.id = o.at("id").get<int>();
    os.x = o.at("x").get<double>();
    os.y = o.at("y").get<double>();
    os.lane = o.at("lane").get<int>();
    os.v = o.at("v").get<double>();
    os.length = o.at("l").get<double>();
    os.width = o.at("w").get<double>();
    s.obstacles.push_back(os);
  }
  return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scenario: cannot open " + path);
  out << scenario_to_json(s);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

}  // namespace zonoplan
