#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zonoplan/frs.hpp"
#include "zonoplan/highway.hpp"
#include "zonoplan/obstacles.hpp"
#include "zonoplan/relu_graph.hpp"

namespace zonoplan {

enum class ConstraintBackend { Sdf, Halfspace };

std::string backend_name(ConstraintBackend b);
std::optional<ConstraintBackend> backend_from_name(const std::string& s);

struct Waypoint {
  Vec2 position;
  int lane_id = 0;
};

struct HlpConfig {
  double d_safe = 12.0;
  double d_wp_max = 60.0;
};

/// Picks the lane whose nearest obstacle ahead is furthest and places the
/// waypoint toward it, capped by d_wp_max. Ties fall to the current lane,
/// then the lowest lane id.
Waypoint high_level_planner(const HighwayConfig& highway, const HlpConfig& cfg,
                            const EgoState& z0, const std::vector<ObstacleState>& obstacles,
                            double t_sense);

struct PlannerConfig {
  ConstraintBackend backend = ConstraintBackend::Sdf;
  int max_iter = 15;         // inner quasi-Newton step cap per bin
  double time_budget = 0.35;  // wall-clock seconds per planning iteration
  double kkt_tol = 1e-6;
  double feas_tol = 1e-8;
  double margin = 1e-6;  // enforced clearance so feasible means strictly > 0
  double sensor_radius = 260.0;
  HlpConfig hlp;
};

struct PlanStats {
  long constraint_evals = 0;
  long gradient_evals = 0;
  long solver_iters = 0;
  long constraints_total = 0;
  long constraints_pruned = 0;
  int bins_sampled = 0;
  int bins_active = 0;
  double sample_seconds = 0.0;
  double solve_seconds = 0.0;
  double constraint_eval_seconds = 0.0;
  double gradient_eval_seconds = 0.0;
};

struct PlanResult {
  bool feasible = false;
  Vec2 p_star;
  int bin_id = -1;
  double cost = 0.0;
  Waypoint waypoint;
  PlanStats stats;
};

/// Half-space form of a buffered obstacle polygon: unit outward normals and
/// offsets per face. The constraint value max_f(n_f . x - b_f) is positive
/// exactly when x lies outside the polygon.
struct HalfspaceSet {
  std::vector<Vec2> normals;
  std::vector<double> offsets;
  // measure-zero polygons fall back to plain segment distance
  bool degenerate = false;
  Segment segment;
};

HalfspaceSet halfspace_from_polygon(const VertexPolygon& poly);
double halfspace_value(const HalfspaceSet& hs, const Vec2& x);
/// Value and subgradient (lowest-index maximizing face).
std::pair<double, Vec2> halfspace_value_gradient(const HalfspaceSet& hs, const Vec2& x);

/// One collision constraint of the optimization problem: a time-interval /
/// obstacle pair with the query center affine in the trajectory parameter.
struct PlanConstraint {
  ParamCoupling coupling;
  SdfGraph graph;          // sdf backend
  HalfspaceSet halfspace;  // halfspace backend
  VertexPolygon buffered;  // for geometric sampling / re-verification
  int interval = 0;
  int obstacle = 0;
};

struct BinProblem {
  const ReachableSet* reach = nullptr;
  std::vector<PlanConstraint> constraints;
  Mat2 cost_jacobian;   // d(predicted position)/dp at the handoff time
  Vec2 cost_base;       // predicted position at p = 0
};

/// Bins whose diagonal parameter samples pass all constraints geometrically.
std::vector<int> sample_feasible_bins(const FrsLibrary& frs, const EgoState& z0,
                                      const std::vector<BinProblem>& problems);

/// Builds constraint sets for every speed-valid bin against the predictions,
/// pruning (interval, obstacle) pairs that a center-distance bound proves
/// can never be violated within the bin.
std::vector<BinProblem> build_problems(const FrsLibrary& frs, const PlannerConfig& cfg,
                                       const EgoState& z0,
                                       const std::vector<ObstaclePrediction>& predictions,
                                       PlanStats* stats);

/// Full planning iteration: sense-filtered obstacles in, waypoint selection,
/// bin sampling, and the batched augmented-Lagrangian solve. `sense_time` is
/// the absolute time obstacle states are sampled at; `window_offset` shifts
/// the prediction horizon (the receding-horizon loop plans for the window
/// starting one driving phase ahead).
PlanResult plan_iteration(const FrsLibrary& frs, const PlannerConfig& cfg, const EgoState& z0,
                          const std::vector<ObstacleState>& sensed_obstacles,
                          const HighwayConfig& highway, double sense_time,
                          double window_offset, const Vec2* warm_start = nullptr);

}  // namespace zonoplan
