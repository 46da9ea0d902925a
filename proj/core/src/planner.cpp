#include "zonoplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace zonoplan {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vec2 clamp_to_box(const Vec2& p, const BinSpec& bin) {
  return {std::min(std::max(p.x, bin.p_lo.x), bin.p_hi.x),
          std::min(std::max(p.y, bin.p_lo.y), bin.p_hi.y)};
}

}  // namespace

std::string backend_name(ConstraintBackend b) {
  return b == ConstraintBackend::Sdf ? "sdf" : "halfspace";
}

std::optional<ConstraintBackend> backend_from_name(const std::string& s) {
  if (s == "sdf") return ConstraintBackend::Sdf;
  if (s == "halfspace") return ConstraintBackend::Halfspace;
  return std::nullopt;
}

Waypoint high_level_planner(const HighwayConfig& highway, const HlpConfig& cfg,
                            const EgoState& z0, const std::vector<ObstacleState>& obstacles,
                            double t_sense) {
  const int current = highway.lane_of(z0.y);
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> gap(highway.lane_count, inf);
  for (const ObstacleState& o : obstacles) {
    if (o.lane < 0 || o.lane >= highway.lane_count) continue;
    const double ahead = o.position_at(t_sense).x - z0.x;
    if (ahead > 0.0) gap[o.lane] = std::min(gap[o.lane], ahead);
  }

  int best = current;
  for (int lane = 0; lane < highway.lane_count; ++lane) {
    if (gap[lane] > gap[best] + 1e-9) {
      best = lane;
    } else if (std::abs(gap[lane] - gap[best]) <= 1e-9 && lane != best) {
      // tie: keep the current lane if tied with it, else the lowest id
      if (best != current && lane < best) best = lane;
    }
  }

  const double ahead = std::max(0.0, std::min(gap[best] - cfg.d_safe, cfg.d_wp_max));
  return {{z0.x + ahead, highway.lane_center(best)}, best};
}

HalfspaceSet halfspace_from_polygon(const VertexPolygon& poly) {
  HalfspaceSet hs;
  const std::size_t n = poly.size();
  if (n <= 2) {
    hs.degenerate = true;
    hs.segment = n == 2 ? Segment{poly[0], poly[1]} : Segment{poly[0], poly[0]};
    return hs;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 edge = poly[(i + 1) % n] - a;
    Vec2 normal{edge.y, -edge.x};
    const double len = normal.norm();
    if (len < 1e-15) continue;
    normal = normal * (1.0 / len);
    hs.normals.push_back(normal);
    hs.offsets.push_back(dot(normal, a));
  }
  return hs;
}

double halfspace_value(const HalfspaceSet& hs, const Vec2& x) {
  if (hs.degenerate) return point_segment_distance(x, hs.segment).distance;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < hs.normals.size(); ++f) {
    best = std::max(best, dot(hs.normals[f], x) - hs.offsets[f]);
  }
  return best;
}

std::pair<double, Vec2> halfspace_value_gradient(const HalfspaceSet& hs, const Vec2& x) {
  if (hs.degenerate) {
    const PointSegmentResult r = point_segment_distance(x, hs.segment);
    const Vec2 d = x - r.closest;
    const double n = d.norm();
    return {r.distance, n < 1e-12 ? Vec2{0, 0} : d * (1.0 / n)};
  }
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_f = 0;
  for (std::size_t f = 0; f < hs.normals.size(); ++f) {
    const double v = dot(hs.normals[f], x) - hs.offsets[f];
    if (v > best) {
      best = v;
      best_f = f;
    }
  }
  return {best, hs.normals[best_f]};
}

std::vector<BinProblem> build_problems(const FrsLibrary& frs, const PlannerConfig& cfg,
                                       const EgoState& z0,
                                       const std::vector<ObstaclePrediction>& predictions,
                                       PlanStats* stats) {
  std::vector<BinProblem> problems;
  const Mat2 rot = rotation(z0.h);
  const double prune_margin = cfg.margin + 0.5;

  for (const ReachableSet& rs : frs.bins) {
    if (!rs.bin.valid_speed(z0.v)) continue;
    BinProblem prob;
    prob.reach = &rs;
    prob.cost_jacobian = maneuver_position_jacobian(z0, frs.timing, frs.timing.t_m);
    {
      const BodyState at_zero = maneuver_body_state(z0.v, {0.0, 0.0}, frs.timing, frs.timing.t_m);
      prob.cost_base = z0.position() + rot * at_zero.pos;
    }

    const Vec2 p_mid = rs.bin.center();
    const Vec2 half{0.5 * (rs.bin.p_hi.x - rs.bin.p_lo.x), 0.5 * (rs.bin.p_hi.y - rs.bin.p_lo.y)};

    for (std::size_t j = 0; j < rs.intervals.size(); ++j) {
      const ReachInterval& ri = rs.intervals[j];
      const Mat2 a_world = rot * ri.a;
      const Vec2 base_world = z0.position() + rot * ri.center_at(z0.v, {0.0, 0.0});

      std::vector<Vec2> world_gens;
      world_gens.reserve(ri.generators.size());
      double reach_radius = 0.0;
      for (const Vec2& g : ri.generators) {
        world_gens.push_back(rot * g);
        reach_radius += g.norm();
      }
      // center excursion over the parameter box
      double param_radius = 0.0;
      for (int sx = -1; sx <= 1; sx += 2) {
        for (int sy = -1; sy <= 1; sy += 2) {
          param_radius = std::max(param_radius,
                                  (a_world * Vec2{sx * half.x, sy * half.y}).norm());
        }
      }
      const Vec2 c_mid = base_world + a_world * p_mid;

      for (const ObstaclePrediction& pred : predictions) {
        if (stats != nullptr) ++stats->constraints_total;
        const Zonotope& slice = pred.slices[j];
        const double lower_bound =
            (slice.center() - c_mid).norm() - param_radius - reach_radius - slice.radius();
        if (lower_bound > prune_margin) {
          if (stats != nullptr) ++stats->constraints_pruned;
          continue;
        }

        PlanConstraint c;
        c.interval = static_cast<int>(j);
        c.obstacle = pred.obstacle_id;
        c.coupling = {base_world, a_world};
        const Zonotope reach_zono(c_mid, world_gens);
        const Zonotope buffered = buffered_obstacle(reach_zono, slice);
        c.buffered = enumerate_vertices(buffered);
        if (cfg.backend == ConstraintBackend::Sdf) {
          c.graph = build_sdf_graph(reach_zono, {slice});
        } else {
          c.halfspace = halfspace_from_polygon(c.buffered);
        }
        prob.constraints.push_back(std::move(c));
      }
    }
    problems.push_back(std::move(prob));
  }
  return problems;
}

std::vector<int> sample_feasible_bins(const FrsLibrary& frs, const EgoState& z0,
                                      const std::vector<BinProblem>& problems) {
  (void)frs;
  (void)z0;
  std::vector<int> kept;
  for (std::size_t idx = 0; idx < problems.size(); ++idx) {
    const BinProblem& prob = problems[idx];
    const BinSpec& bin = prob.reach->bin;
    bool any_ok = false;
    for (int i = 0; i < 10 && !any_ok; ++i) {
      const double t = i / 9.0;
      const Vec2 p{bin.p_lo.x + t * (bin.p_hi.x - bin.p_lo.x),
                   bin.p_lo.y + t * (bin.p_hi.y - bin.p_lo.y)};
      bool ok = true;
      for (const PlanConstraint& c : prob.constraints) {
        if (signed_distance_point_polygon(c.buffered, c.coupling.center_at(p)) <= 0.0) {
          ok = false;
          break;
        }
      }
      any_ok = ok;
    }
    if (any_ok) kept.push_back(static_cast<int>(idx));
  }
  return kept;
}

namespace {

struct SolveState {
  const BinProblem* prob = nullptr;
  Vec2 p;
  Mat2 hinv = Mat2::identity();
  std::vector<double> lambda;
  double mu = 10.0;
  double omega = 1e-2;
  double last_viol = std::numeric_limits<double>::infinity();
  double last_pg_norm = std::numeric_limits<double>::infinity();
  int iters = 0;
  bool converged = false;
};

struct Evaluator {
  const PlannerConfig* cfg;
  PlanStats* stats;
  Clock::time_point t0;

  std::vector<double> constraint_values(const BinProblem& prob, const Vec2& p) const {
    const auto start = Clock::now();
    std::vector<double> vals;
    vals.reserve(prob.constraints.size());
    for (const PlanConstraint& c : prob.constraints) {
      const Vec2 cz = c.coupling.center_at(p);
      vals.push_back(cfg->backend == ConstraintBackend::Sdf ? c.graph.forward(cz)
                                                            : halfspace_value(c.halfspace, cz));
    }
    ++stats->constraint_evals;
    stats->constraint_eval_seconds += std::chrono::duration<double>(Clock::now() - start).count();
    return vals;
  }

  void constraint_values_grads(const BinProblem& prob, const Vec2& p,
                               std::vector<double>& vals, std::vector<Vec2>& grads) const {
    const auto start = Clock::now();
    vals.clear();
    grads.clear();
    vals.reserve(prob.constraints.size());
    grads.reserve(prob.constraints.size());
    for (const PlanConstraint& c : prob.constraints) {
      const Vec2 cz = c.coupling.center_at(p);
      if (cfg->backend == ConstraintBackend::Sdf) {
        const SdfGraph::Backward bw = c.graph.forward_backward(cz);
        vals.push_back(bw.value);
        grads.push_back(c.coupling.a.transpose() * bw.grad_cz);
      } else {
        const auto [v, g] = halfspace_value_gradient(c.halfspace, cz);
        vals.push_back(v);
        grads.push_back(c.coupling.a.transpose() * g);
      }
    }
    ++stats->gradient_evals;
    stats->gradient_eval_seconds += std::chrono::duration<double>(Clock::now() - start).count();
  }
};

double cost_value(const BinProblem& prob, const Vec2& wp, const Vec2& p) {
  return (prob.cost_base + prob.cost_jacobian * p - wp).norm();
}

Vec2 cost_gradient(const BinProblem& prob, const Vec2& wp, const Vec2& p) {
  const Vec2 d = prob.cost_base + prob.cost_jacobian * p - wp;
  const double n = d.norm();
  if (n < 1e-12) return {0.0, 0.0};
  return prob.cost_jacobian.transpose() * (d * (1.0 / n));
}

// augmented Lagrangian with inequality h_i = margin - c_i <= 0
double al_value(const SolveState& st, const std::vector<double>& cvals, double margin,
                double cost) {
  double phi = cost;
  for (std::size_t i = 0; i < cvals.size(); ++i) {
    const double h = margin - cvals[i];
    const double t = std::max(0.0, st.lambda[i] + st.mu * h);
    phi += (t * t - st.lambda[i] * st.lambda[i]) / (2.0 * st.mu);
  }
  return phi;
}

Vec2 al_gradient(const SolveState& st, const std::vector<double>& cvals,
                 const std::vector<Vec2>& cgrads, double margin, const Vec2& cost_grad) {
  Vec2 g = cost_grad;
  for (std::size_t i = 0; i < cvals.size(); ++i) {
    const double h = margin - cvals[i];
    const double t = std::max(0.0, st.lambda[i] + st.mu * h);
    if (t > 0.0) g -= cgrads[i] * t;
  }
  return g;
}

void bfgs_update(Mat2& hinv, const Vec2& s, const Vec2& y) {
  const double sy = dot(s, y);
  if (sy <= 1e-12 * s.norm() * y.norm() || sy <= 0.0) return;
  const double rho = 1.0 / sy;
  // (I - rho s y^T) Hinv (I - rho y s^T) + rho s s^T
  const Mat2 i = Mat2::identity();
  const Mat2 syt{s.x * y.x, s.x * y.y, s.y * y.x, s.y * y.y};
  const Mat2 yst = syt.transpose();
  const Mat2 sst{s.x * s.x, s.x * s.y, s.y * s.x, s.y * s.y};
  Mat2 left{i.a - rho * syt.a, i.b - rho * syt.b, i.c - rho * syt.c, i.d - rho * syt.d};
  Mat2 right{i.a - rho * yst.a, i.b - rho * yst.b, i.c - rho * yst.c, i.d - rho * yst.d};
  const Mat2 core = left * hinv * right;
  hinv = {core.a + rho * sst.a, core.b + rho * sst.b, core.c + rho * sst.c,
          core.d + rho * sst.d};
}

}  // namespace

PlanResult plan_iteration(const FrsLibrary& frs, const PlannerConfig& cfg, const EgoState& z0,
                          const std::vector<ObstacleState>& sensed_obstacles,
                          const HighwayConfig& highway, double sense_time,
                          double window_offset, const Vec2* warm_start) {
  const auto t0 = Clock::now();
  const double deadline = cfg.time_budget;

  PlanResult result;
  result.waypoint = high_level_planner(highway, cfg.hlp, z0, sensed_obstacles, sense_time);
  PlanStats& stats = result.stats;

  std::vector<ObstaclePrediction> predictions;
  predictions.reserve(sensed_obstacles.size());
  for (const ObstacleState& o : sensed_obstacles) {
    predictions.push_back(predict_obstacle(o, frs.timing, sense_time + window_offset));
  }

  std::vector<BinProblem> problems = build_problems(frs, cfg, z0, predictions, &stats);

  const auto sample_start = Clock::now();
  const std::vector<int> kept = sample_feasible_bins(frs, z0, problems);
  stats.sample_seconds = std::chrono::duration<double>(Clock::now() - sample_start).count();
  stats.bins_sampled = static_cast<int>(problems.size());
  stats.bins_active = static_cast<int>(kept.size());

  if (kept.empty()) {
    stats.solve_seconds = seconds_since(t0);
    return result;  // infeasible; caller runs the failsafe
  }

  Evaluator ev{&cfg, &stats, t0};
  const Vec2 wp = result.waypoint.position;

  std::vector<SolveState> states;
  states.reserve(kept.size());
  for (int idx : kept) {
    SolveState st;
    st.prob = &problems[static_cast<std::size_t>(idx)];
    const BinSpec& bin = st.prob->reach->bin;
    st.p = bin.center();
    if (warm_start != nullptr && bin.contains_param(*warm_start)) {
      st.p = clamp_to_box(*warm_start, bin);
    }
    st.lambda.assign(st.prob->constraints.size(), 0.0);
    states.push_back(std::move(st));
  }

  // round-robin augmented-Lagrangian outer steps with projected BFGS inner
  // steps; every bin shares the wall-clock deadline
  bool out_of_time = false;
  while (!out_of_time) {
    bool progressed = false;
    for (SolveState& st : states) {
      if (st.converged || st.iters >= cfg.max_iter) continue;
      progressed = true;
      const BinSpec& bin = st.prob->reach->bin;

      std::vector<double> cvals;
      std::vector<Vec2> cgrads;
      for (int chunk = 0; chunk < 3 && st.iters < cfg.max_iter; ++chunk) {
        ev.constraint_values_grads(*st.prob, st.p, cvals, cgrads);
        const double phi = al_value(st, cvals, cfg.margin, cost_value(*st.prob, wp, st.p));
        const Vec2 g =
            al_gradient(st, cvals, cgrads, cfg.margin, cost_gradient(*st.prob, wp, st.p));

        const Vec2 pg = st.p - clamp_to_box(st.p - g, bin);
        st.last_pg_norm = pg.norm();
        if (st.last_pg_norm <= st.omega) break;

        Vec2 dir = Vec2{0, 0} - (st.hinv * g);
        if (dot(dir, g) >= -1e-12 * dir.norm() * g.norm()) {
          dir = Vec2{0, 0} - g;
          st.hinv = Mat2::identity();
        }

        double alpha = 1.0;
        Vec2 p_new = st.p;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
          const Vec2 cand = clamp_to_box(st.p + dir * alpha, bin);
          const Vec2 step = cand - st.p;
          if (step.norm() < 1e-14) break;
          const std::vector<double> cand_vals = ev.constraint_values(*st.prob, cand);
          const double phi_new =
              al_value(st, cand_vals, cfg.margin, cost_value(*st.prob, wp, cand));
          if (phi_new <= phi + 1e-4 * dot(g, step)) {
            p_new = cand;
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> vals_new;
        std::vector<Vec2> grads_new;
        ev.constraint_values_grads(*st.prob, p_new, vals_new, grads_new);
        const Vec2 g_new = al_gradient(st, vals_new, grads_new, cfg.margin,
                                       cost_gradient(*st.prob, wp, p_new));
        bfgs_update(st.hinv, p_new - st.p, g_new - g);
        st.p = p_new;
        ++st.iters;
        ++stats.solver_iters;

        if (seconds_since(t0) > deadline) {
          out_of_time = true;
          break;
        }
      }

      // multiplier update
      const std::vector<double> vals = ev.constraint_values(*st.prob, st.p);
      double viol = 0.0;
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double h = cfg.margin - vals[i];
        st.lambda[i] = std::max(0.0, st.lambda[i] + st.mu * h);
        viol = std::max(viol, h);
      }
      viol = std::max(viol, 0.0);
      if (viol > 0.25 * st.last_viol && viol > cfg.feas_tol) {
        st.mu = std::min(st.mu * 4.0, 1e8);
      } else {
        st.omega = std::max(st.omega * 0.25, 0.25 * cfg.kkt_tol);
      }
      st.last_viol = viol;
      if (viol <= cfg.feas_tol && st.last_pg_norm <= cfg.kkt_tol) st.converged = true;

      if (out_of_time || seconds_since(t0) > deadline) {
        out_of_time = true;
        break;
      }
    }
    if (!progressed) break;
  }

  // geometric re-verification and min-cost selection, independent of the
  // solver path
  double best_cost = std::numeric_limits<double>::infinity();
  for (const SolveState& st : states) {
    bool ok = true;
    for (const PlanConstraint& c : st.prob->constraints) {
      if (signed_distance_point_polygon(c.buffered, c.coupling.center_at(st.p)) <= 0.0) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    const double cost = cost_value(*st.prob, wp, st.p);
    if (cost < best_cost) {
      best_cost = cost;
      result.feasible = true;
      result.p_star = st.p;
      result.bin_id = st.prob->reach->bin.bin_id;
      result.cost = cost;
    }
  }

  stats.solve_seconds = seconds_since(t0);
  return result;
}

}  // namespace zonoplan
