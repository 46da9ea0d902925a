#include "zonoplan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "zonoplan/svg.hpp"

namespace zonoplan {

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::SafeStop: return "safe_stop";
    case Outcome::Crash: return "crash";
    case Outcome::Timeout: return "timeout";
  }
  return "unknown";
}

namespace {

VertexPolygon ego_polygon(const EgoState& ego, const EgoFootprint& fp) {
  const Mat2 rot = rotation(ego.h);
  const Vec2 c = ego.position();
  const double hl = fp.length / 2.0;
  const double hw = fp.width / 2.0;
  std::vector<Vec2> verts = {c + rot * Vec2{hl, hw}, c + rot * Vec2{-hl, hw},
                             c + rot * Vec2{-hl, -hw}, c + rot * Vec2{hl, -hw}};
  return VertexPolygon{std::move(verts)};
}

VertexPolygon obstacle_polygon(const ObstacleState& o, double t) {
  const Vec2 c = o.position_at(t);
  const double hl = o.length / 2.0;
  const double hw = o.width / 2.0;
  std::vector<Vec2> verts = {{c.x + hl, c.y + hw}, {c.x - hl, c.y + hw},
                             {c.x - hl, c.y - hw}, {c.x + hl, c.y - hw}};
  return VertexPolygon{std::move(verts)};
}

struct ActivePlan {
  EgoState z0;
  Vec2 p;
  double start = 0.0;
};

struct DenseSimOutcome {
  bool crashed = false;
  bool reached_goal = false;
  double end_time = 0.0;
  EgoState end_state;
};

// Steps ground truth on [t_from, t_to] under the active plan, checking
// collisions while the ego is moving and watching for the goal line.
DenseSimOutcome simulate_segment(const FrsLibrary& frs, const Scenario& scenario,
                                 const SimConfig& cfg, const ActivePlan& plan, double t_from,
                                 double t_to, std::vector<Vec2>* trajectory) {
  DenseSimOutcome out;
  const int steps = std::max(1, static_cast<int>(std::ceil((t_to - t_from) / cfg.dt_sim)));
  EgoState ego = maneuver_world_state(plan.z0, plan.p, frs.timing, t_from - plan.start);
  for (int i = 0; i <= steps; ++i) {
    const double t = std::min(t_from + i * cfg.dt_sim, t_to);
    ego = maneuver_world_state(plan.z0, plan.p, frs.timing, t - plan.start);
    if (trajectory != nullptr && i % 10 == 0) trajectory->push_back(ego.position());
    if (ego.v > 1e-9) {
      for (const ObstacleState& o : scenario.obstacles) {
        if (collision_check(ego, frs.footprint, o, t)) {
          out.crashed = true;
          out.end_time = t;
          out.end_state = ego;
          return out;
        }
      }
    }
    if (ego.x >= scenario.goal_x) {
      out.reached_goal = true;
      out.end_time = t;
      out.end_state = ego;
      return out;
    }
  }
  out.end_time = t_to;
  out.end_state = ego;
  return out;
}

// Post-hoc sensing sufficiency: an obstacle that was outside the sensor
// radius at plan time must not meet any instantiated reachable slice of the
// plan that was chosen.
bool audit_unsensed(const FrsLibrary& frs, const Scenario& scenario,
                    const std::vector<int>& sensed_ids, const EgoState& z0, int bin_id,
                    const Vec2& p, double window_start) {
  const ReachableSet* rs = frs.find_bin(bin_id);
  if (rs == nullptr) return true;
  const std::vector<Zonotope> reach = instantiate(*rs, z0, p);
  for (const ObstacleState& o : scenario.obstacles) {
    if (std::find(sensed_ids.begin(), sensed_ids.end(), o.id) != sensed_ids.end()) continue;
    const ObstaclePrediction truth = predict_obstacle(o, frs.timing, window_start);
    for (std::size_t j = 0; j < reach.size(); ++j) {
      const VertexPolygon a = enumerate_vertices(reach[j]);
      const VertexPolygon b = enumerate_vertices(truth.slices[j]);
      if (polygons_intersect(a, b)) return false;
    }
  }
  return true;
}

}  // namespace

bool collision_check(const EgoState& ego, const EgoFootprint& fp, const ObstacleState& obs,
                     double t) {
  return polygons_intersect(ego_polygon(ego, fp), obstacle_polygon(obs, t));
}

TrialResult run_trial(const FrsLibrary& frs, const Scenario& scenario, const SimConfig& cfg) {
  TrialResult result;
  const PlanTiming& timing = frs.timing;
  const double t_m = timing.t_m;

  ActivePlan plan{scenario.ego_start, {0.0, 0.0}, 0.0};
  // the initial parameter must sit in some bin for instantiation to work
  bool p0_valid = false;
  for (const ReachableSet& rs : frs.bins) {
    if (rs.bin.contains_param(plan.p) && rs.bin.valid_speed(plan.z0.v)) p0_valid = true;
  }
  if (!p0_valid) {
    throw std::invalid_argument("run_trial: initial state has no valid bin");
  }

  std::vector<Vec2> trajectory;
  Vec2 prev_p = plan.p;
  double t = 0.0;
  int frame = 0;

  while (true) {
    if (t >= cfg.max_sim_time) {
      result.outcome = Outcome::Timeout;
      break;
    }
    ++result.iterations;

    // sense at t, plan for the window starting at t + t_m
    const std::vector<ObstacleState> sensed = sense_obstacles(
        scenario.obstacles, maneuver_world_state(plan.z0, plan.p, timing, t - plan.start)
                                .position(),
        cfg.planner.sensor_radius, t);
    const EgoState z_next = maneuver_world_state(plan.z0, plan.p, timing, t + t_m - plan.start);

    bool speed_valid = false;
    for (const ReachableSet& rs : frs.bins) {
      if (rs.bin.valid_speed(z_next.v)) speed_valid = true;
    }

    PlanResult pr;
    if (speed_valid) {
      pr = plan_iteration(frs, cfg.planner, z_next, sensed, scenario.highway, t, t_m,
                          &prev_p);
      result.solve_times.push_back(pr.stats.solve_seconds);
      result.constraint_evals += pr.stats.constraint_evals;
      result.gradient_evals += pr.stats.gradient_evals;
      result.solver_iters += pr.stats.solver_iters;
    } else {
      result.validity_failsafe = true;
    }

    if (cfg.sensing_audit && pr.feasible) {
      std::vector<int> sensed_ids;
      sensed_ids.reserve(sensed.size());
      for (const ObstacleState& o : sensed) sensed_ids.push_back(o.id);
      if (!audit_unsensed(frs, scenario, sensed_ids, z_next, pr.bin_id, pr.p_star, t + t_m)) {
        result.sensing_audit_ok = false;
      }
    }

    if (!cfg.svg_dir.empty()) {
      SvgFrame fr;
      fr.highway = scenario.highway;
      fr.t = t;
      fr.ego = maneuver_world_state(plan.z0, plan.p, timing, t - plan.start);
      fr.obstacles = scenario.obstacles;
      fr.waypoint = pr.waypoint;
      fr.trajectory = trajectory;
      fr.footprint = frs.footprint;
      if (pr.feasible) {
        const ReachableSet* rs = frs.find_bin(pr.bin_id);
        for (const Zonotope& z : instantiate(*rs, z_next, pr.p_star)) {
          fr.reach_polys.push_back(enumerate_vertices(z));
        }
      }
      std::ostringstream name;
      name << cfg.svg_dir << "/frame_" << std::setfill('0') << std::setw(5) << frame++
           << ".svg";
      write_svg_frame(name.str(), fr);
    }

    // execute the current plan over [t, t + t_m)
    const DenseSimOutcome seg =
        simulate_segment(frs, scenario, cfg, plan, t, t + t_m, &trajectory);
    if (seg.crashed) {
      result.outcome = Outcome::Crash;
      result.sim_time = seg.end_time;
      result.final_speed = seg.end_state.v;
      result.distance = seg.end_state.x - scenario.ego_start.x;
      return result;
    }
    if (seg.reached_goal) {
      result.outcome = Outcome::Success;
      result.sim_time = seg.end_time;
      result.final_speed = seg.end_state.v;
      result.distance = seg.end_state.x - scenario.ego_start.x;
      return result;
    }

    if (!speed_valid || !pr.feasible) {
      // failsafe: ride the braking tail of the already-verified plan
      const double t_stop = plan.start + timing.t_f;
      const DenseSimOutcome tail =
          simulate_segment(frs, scenario, cfg, plan, t + t_m, t_stop, &trajectory);
      result.sim_time = tail.end_time;
      result.final_speed = tail.end_state.v;
      result.distance = tail.end_state.x - scenario.ego_start.x;
      if (tail.crashed) {
        result.outcome = Outcome::Crash;
      } else if (tail.reached_goal) {
        result.outcome = Outcome::Success;
      } else {
        result.outcome = Outcome::SafeStop;
      }
      return result;
    }

    // hand off to the new plan at the switch boundary
    if (std::abs(z_next.v) > frs.v_max + 1e-6) {
      throw std::logic_error("run_trial: executed trajectory left the speed envelope");
    }
    prev_p = pr.p_star;
    plan = {z_next, pr.p_star, t + t_m};
    t += t_m;
    const EgoState cur = plan.z0;
    result.distance = cur.x - scenario.ego_start.x;
    result.final_speed = cur.v;
    result.sim_time = t;
  }
  return result;
}

}  // namespace zonoplan
