#pragma once

#include <string>
#include <vector>

#include "zonoplan/frs.hpp"
#include "zonoplan/highway.hpp"
#include "zonoplan/planner.hpp"

namespace zonoplan {

enum class Outcome { Success, SafeStop, Crash, Timeout };

std::string outcome_name(Outcome o);

struct SimConfig {
  PlannerConfig planner;
  double dt_sim = 0.01;
  double max_sim_time = 300.0;
  bool sensing_audit = true;
  std::string svg_dir;  // per-iteration frame dump when non-empty
};

struct TrialResult {
  Outcome outcome = Outcome::Timeout;
  int iterations = 0;
  double distance = 0.0;
  double final_speed = 0.0;
  double sim_time = 0.0;
  std::vector<double> solve_times;  // wall-clock seconds per planning iteration
  long constraint_evals = 0;
  long gradient_evals = 0;
  long solver_iters = 0;
  bool sensing_audit_ok = true;
  bool validity_failsafe = false;
};

/// Rotated-rectangle overlap test between the ego footprint at its current
/// pose and an obstacle's footprint at time t.
bool collision_check(const EgoState& ego, const EgoFootprint& fp, const ObstacleState& obs,
                     double t);

/// Receding-horizon closed loop: execute the current parameter for one
/// driving phase while planning the next window; on solver infeasibility the
/// braking tail of the current (already verified) plan runs to a stop.
/// Collision checks run densely whenever the ego is moving.
TrialResult run_trial(const FrsLibrary& frs, const Scenario& scenario, const SimConfig& cfg);

}  // namespace zonoplan
