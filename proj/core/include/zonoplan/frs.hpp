#pragma once

#include <string>
#include <vector>

#include "zonoplan/maneuver.hpp"
#include "zonoplan/zonotope.hpp"

namespace zonoplan {

struct EgoFootprint {
  double length = 4.8;
  double width = 2.2;
};

/// One cell of the trajectory-parameter partition with its initial-speed
/// validity range.
struct BinSpec {
  int bin_id = 0;
  Vec2 p_lo;
  Vec2 p_hi;
  double v0_lo = 0.0;
  double v0_hi = 30.0;

  Vec2 center() const { return {0.5 * (p_lo.x + p_hi.x), 0.5 * (p_lo.y + p_hi.y)}; }
  bool contains_param(const Vec2& p, double tol = 1e-9) const {
    return p.x >= p_lo.x - tol && p.x <= p_hi.x + tol && p.y >= p_lo.y - tol &&
           p.y <= p_hi.y + tol;
  }
  bool valid_speed(double v0, double tol = 1e-9) const {
    return v0 >= v0_lo - tol && v0 <= v0_hi + tol;
  }
};

/// Body-frame reachable slice for one time interval: center is affine in the
/// initial speed and the trajectory parameter, generators are fixed.
struct ReachInterval {
  Vec2 c_base;
  Vec2 c_v0;           // center coefficient of the initial speed
  Mat2 a;              // center coefficient of the trajectory parameter
  std::vector<Vec2> generators;

  Vec2 center_at(double v0, const Vec2& p) const { return c_base + c_v0 * v0 + a * p; }
};

struct ReachableSet {
  BinSpec bin;
  std::vector<ReachInterval> intervals;
};

struct FrsLibrary {
  PlanTiming timing;
  EgoFootprint footprint;
  double v_max = 30.0;
  std::vector<ReachableSet> bins;

  const ReachableSet* find_bin(int bin_id) const;
};

struct FrsConfig {
  PlanTiming timing;
  EgoFootprint footprint;
  double v_max = 30.0;
  // fit grid is (corners + midpoints)^3; verification uses a denser grid
  int fit_grid = 3;
  int fit_time_samples = 17;
  int verify_grid = 5;
  int verify_time_samples = 41;
  double residual_inflation = 1.5;
  int max_inflation_rounds = 5;
};

/// The 13-bin default partition: seven straight-driving speed bands plus
/// three left and three right lane-change bands, covering
/// [0, 28] x [-3.7, 3.7] exactly.
std::vector<BinSpec> default_bins(double v_max_param = 28.0, double lane_width = 3.7);

/// Fits per-interval affine center maps over a maneuver grid, covers the
/// footprint sweep with axis-aligned generators, and verifies containment on
/// a denser grid, inflating generators as needed. Throws std::runtime_error
/// if containment cannot be established within the configured rounds.
FrsLibrary generate_frs(const FrsConfig& config, const std::vector<BinSpec>& bins);
FrsLibrary generate_frs(const FrsConfig& config);

/// World-frame reachable slices for a concrete initial state and parameter.
/// Throws std::invalid_argument if p is outside the bin or the initial speed
/// is outside the bin's validity range.
std::vector<Zonotope> instantiate(const ReachableSet& rs, const EgoState& z0, const Vec2& p);

/// Body-frame slice center without the world transform (used by pruning).
Vec2 body_center(const ReachInterval& ri, double v0, const Vec2& p);

std::string frs_to_json(const FrsLibrary& lib);
FrsLibrary frs_from_json(const std::string& text);
void save_frs(const FrsLibrary& lib, const std::string& path);
FrsLibrary load_frs(const std::string& path);

}  // namespace zonoplan
