#include "zonoplan/frs.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace zonoplan {
namespace {

// Solve the 4x4 normal equations of the per-axis least-squares fit
// c(v0, vd, yd) = b + c_v*v0 + a_x*vd + a_y*yd by Gaussian elimination.
std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> m, std::array<double, 4> rhs) {
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    std::swap(m[col], m[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    if (std::abs(m[col][col]) < 1e-14) {
      throw std::runtime_error("generate_frs: singular fit system");
    }
    for (int r = col + 1; r < 4; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c2 = col; c2 < 4; ++c2) m[r][c2] -= f * m[col][c2];
      rhs[r] -= f * rhs[col];
    }
  }
  std::array<double, 4> x{};
  for (int r = 3; r >= 0; --r) {
    double v = rhs[r];
    for (int c2 = r + 1; c2 < 4; ++c2) v -= m[r][c2] * x[c2];
    x[r] = v / m[r][r];
  }
  return x;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 1 || hi <= lo) {
    out.push_back(0.5 * (lo + hi));
    return out;
  }
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

// Axis-aligned half-extents of the footprint rectangle rotated by h.
Vec2 footprint_extent(const EgoFootprint& fp, double h) {
  const double c = std::abs(std::cos(h));
  const double s = std::abs(std::sin(h));
  return {c * fp.length / 2.0 + s * fp.width / 2.0, s * fp.length / 2.0 + c * fp.width / 2.0};
}

struct SampleGrid {
  std::vector<double> v0s;
  std::vector<double> vds;
  std::vector<double> yds;
};

SampleGrid make_grid(const BinSpec& bin, int n) {
  return {linspace(bin.v0_lo, bin.v0_hi, n), linspace(bin.p_lo.x, bin.p_hi.x, n),
          linspace(bin.p_lo.y, bin.p_hi.y, n)};
}

}  // namespace

const ReachableSet* FrsLibrary::find_bin(int bin_id) const {
  for (const ReachableSet& rs : bins) {
    if (rs.bin.bin_id == bin_id) return &rs;
  }
  return nullptr;
}

std::vector<BinSpec> default_bins(double v_max_param, double lane_width) {
  std::vector<BinSpec> bins;
  const double y_straight = 0.3;
  int id = 0;
  // straight-driving speed bands
  const int n_straight = 7;
  for (int i = 0; i < n_straight; ++i) {
    BinSpec b;
    b.bin_id = id++;
    b.p_lo = {v_max_param * i / n_straight, -y_straight};
    b.p_hi = {v_max_param * (i + 1) / n_straight, y_straight};
    bins.push_back(b);
  }
  // lane changes, three speed bands each side
  const int n_lane = 3;
  for (int side = 0; side < 2; ++side) {
    const double y_lo = side == 0 ? y_straight : -lane_width;
    const double y_hi = side == 0 ? lane_width : -y_straight;
    for (int i = 0; i < n_lane; ++i) {
      BinSpec b;
      b.bin_id = id++;
      b.p_lo = {v_max_param * i / n_lane, y_lo};
      b.p_hi = {v_max_param * (i + 1) / n_lane, y_hi};
      bins.push_back(b);
    }
  }
  return bins;
}

FrsLibrary generate_frs(const FrsConfig& config, const std::vector<BinSpec>& bins) {
  FrsLibrary lib;
  lib.timing = config.timing;
  lib.footprint = config.footprint;
  lib.v_max = config.v_max;

  const int n_intervals = config.timing.interval_count();
  for (const BinSpec& bin_in : bins) {
    BinSpec bin = bin_in;
    bin.v0_lo = std::max(bin.v0_lo, 0.0);
    bin.v0_hi = std::min(std::max(bin.v0_hi, bin.v0_lo), config.v_max);

    ReachableSet rs;
    rs.bin = bin;
    rs.intervals.resize(n_intervals);

    const SampleGrid fit = make_grid(bin, config.fit_grid);
    for (int j = 0; j < n_intervals; ++j) {
      ReachInterval& ri = rs.intervals[j];
      const double t_mid = config.timing.interval_mid(j);

      // least-squares affine fit of the interval-midpoint position
      std::array<std::array<double, 4>, 4> ata{};
      std::array<double, 4> atb_x{};
      std::array<double, 4> atb_y{};
      for (double v0 : fit.v0s) {
        for (double vd : fit.vds) {
          for (double yd : fit.yds) {
            const BodyState s = maneuver_body_state(v0, {vd, yd}, config.timing, t_mid);
            const std::array<double, 4> row{1.0, v0, vd, yd};
            for (int r = 0; r < 4; ++r) {
              for (int c = 0; c < 4; ++c) ata[r][c] += row[r] * row[c];
              atb_x[r] += row[r] * s.pos.x;
              atb_y[r] += row[r] * s.pos.y;
            }
          }
        }
      }
      const std::array<double, 4> cx = solve4(ata, atb_x);
      const std::array<double, 4> cy = solve4(ata, atb_y);
      ri.c_base = {cx[0], cy[0]};
      ri.c_v0 = {cx[1], cy[1]};
      ri.a = {cx[2], cx[3], cy[2], cy[3]};

      // generator extents: inflated fit residual plus the worst corner
      // deviation (in-interval motion and rotated footprint combined)
      double res_x = 0.0, res_y = 0.0;
      double dev_x = 0.0, dev_y = 0.0;
      const std::vector<double> taus =
          linspace(config.timing.interval_start(j), config.timing.interval_end(j),
                   config.fit_time_samples);
      for (double v0 : fit.v0s) {
        for (double vd : fit.vds) {
          for (double yd : fit.yds) {
            const Vec2 fitted = ri.center_at(v0, {vd, yd});
            const BodyState mid = maneuver_body_state(v0, {vd, yd}, config.timing, t_mid);
            res_x = std::max(res_x, std::abs(mid.pos.x - fitted.x));
            res_y = std::max(res_y, std::abs(mid.pos.y - fitted.y));
            for (double tau : taus) {
              const BodyState s = maneuver_body_state(v0, {vd, yd}, config.timing, tau);
              const Vec2 ext = footprint_extent(config.footprint, s.heading);
              dev_x = std::max(dev_x, std::abs(s.pos.x - mid.pos.x) + ext.x);
              dev_y = std::max(dev_y, std::abs(s.pos.y - mid.pos.y) + ext.y);
            }
          }
        }
      }
      ri.generators = {{config.residual_inflation * res_x + dev_x, 0.0},
                       {0.0, config.residual_inflation * res_y + dev_y}};
    }

    // a-posteriori containment verification on a denser grid
    const SampleGrid verify = make_grid(bin, config.verify_grid);
    const double hl = config.footprint.length / 2.0;
    const double hw = config.footprint.width / 2.0;
    bool contained = false;
    for (int round = 0; round <= config.max_inflation_rounds && !contained; ++round) {
      double worst_x = 0.0, worst_y = 0.0;
      int worst_j = -1;
      for (int j = 0; j < n_intervals; ++j) {
        ReachInterval& ri = rs.intervals[j];
        const double rx = ri.generators[0].x;
        const double ry = ri.generators[1].y;
        const std::vector<double> taus =
            linspace(config.timing.interval_start(j), config.timing.interval_end(j),
                     config.verify_time_samples);
        for (double v0 : verify.v0s) {
          for (double vd : verify.vds) {
            for (double yd : verify.yds) {
              const Vec2 fitted = ri.center_at(v0, {vd, yd});
              for (double tau : taus) {
                const BodyState s = maneuver_body_state(v0, {vd, yd}, config.timing, tau);
                const Mat2 rot = rotation(s.heading);
                for (int cxs = -1; cxs <= 1; cxs += 2) {
                  for (int cys = -1; cys <= 1; cys += 2) {
                    const Vec2 corner = s.pos + rot * Vec2{cxs * hl, cys * hw};
                    const double ex = std::abs(corner.x - fitted.x) - rx;
                    const double ey = std::abs(corner.y - fitted.y) - ry;
                    if (ex > worst_x) {
                      worst_x = ex;
                      worst_j = j;
                    }
                    if (ey > worst_y) {
                      worst_y = ey;
                      worst_j = j;
                    }
                  }
                }
              }
            }
          }
        }
      }
      if (worst_x <= 0.0 && worst_y <= 0.0) {
        contained = true;
      } else if (round == config.max_inflation_rounds) {
        std::ostringstream msg;
        msg << "generate_frs: containment verification failed for bin " << bin.bin_id
            << " after " << config.max_inflation_rounds << " inflation rounds (interval "
            << worst_j << ", deficit " << worst_x << ", " << worst_y << ")";
        throw std::runtime_error(msg.str());
      } else {
        for (ReachInterval& ri : rs.intervals) {
          ri.generators[0].x += std::max(worst_x, 0.0) + 1e-9;
          ri.generators[1].y += std::max(worst_y, 0.0) + 1e-9;
        }
      }
    }

    lib.bins.push_back(std::move(rs));
  }
  return lib;
}

FrsLibrary generate_frs(const FrsConfig& config) {
  return generate_frs(config, default_bins());
}

std::vector<Zonotope> instantiate(const ReachableSet& rs, const EgoState& z0, const Vec2& p) {
  if (!rs.bin.contains_param(p)) {
    throw std::invalid_argument("instantiate: parameter outside bin");
  }
  if (!rs.bin.valid_speed(z0.v)) {
    throw std::invalid_argument("instantiate: initial speed outside bin validity");
  }
  const Mat2 rot = rotation(z0.h);
  std::vector<Zonotope> out;
  out.reserve(rs.intervals.size());
  for (const ReachInterval& ri : rs.intervals) {
    const Vec2 c = z0.position() + rot * ri.center_at(z0.v, p);
    std::vector<Vec2> gens;
    gens.reserve(ri.generators.size());
    for (const Vec2& g : ri.generators) gens.push_back(rot * g);
    out.emplace_back(c, std::move(gens));
  }
  return out;
}

Vec2 body_center(const ReachInterval& ri, double v0, const Vec2& p) {
  return ri.center_at(v0, p);
}

namespace {

nlohmann::json vec2_json(const Vec2& v) { return nlohmann::json::array({v.x, v.y}); }
Vec2 vec2_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

std::string frs_to_json(const FrsLibrary& lib) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["vehicle"] = {{"length", lib.footprint.length},
                  {"width", lib.footprint.width},
                  {"v_max", lib.v_max}};
  j["timing"] = {{"dt", lib.timing.dt},
                 {"t_f", lib.timing.t_f},
                 {"t_m", lib.timing.t_m},
                 {"t_plan", lib.timing.t_plan}};
  auto& bins = j["bins"] = nlohmann::json::array();
  for (const ReachableSet& rs : lib.bins) {
    nlohmann::json b;
    b["bin_id"] = rs.bin.bin_id;
    b["p_lo"] = vec2_json(rs.bin.p_lo);
    b["p_hi"] = vec2_json(rs.bin.p_hi);
    b["v0_lo"] = rs.bin.v0_lo;
    b["v0_hi"] = rs.bin.v0_hi;
    auto& ivs = b["intervals"] = nlohmann::json::array();
    for (const ReachInterval& ri : rs.intervals) {
      nlohmann::json e;
      e["c_base"] = vec2_json(ri.c_base);
      e["C"] = nlohmann::json::array({nlohmann::json::array({ri.c_v0.x}),
                                      nlohmann::json::array({ri.c_v0.y})});
      e["A"] = nlohmann::json::array({nlohmann::json::array({ri.a.a, ri.a.b}),
                                      nlohmann::json::array({ri.a.c, ri.a.d})});
      auto& g = e["G"] = nlohmann::json::array();
      for (const Vec2& gen : ri.generators) g.push_back(vec2_json(gen));
      ivs.push_back(std::move(e));
    }
    bins.push_back(std::move(b));
  }
  return j.dump(1);
}

FrsLibrary frs_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("schema_version").get<int>() != 1) {
    throw std::runtime_error("frs_from_json: unsupported schema version");
  }
  FrsLibrary lib;
  lib.footprint.length = j.at("vehicle").at("length").get<double>();
  lib.footprint.width = j.at("vehicle").at("width").get<double>();
  lib.v_max = j.at("vehicle").at("v_max").get<double>();
  lib.timing.dt = j.at("timing").at("dt").get<double>();
  lib.timing.t_f = j.at("timing").at("t_f").get<double>();
  lib.timing.t_m = j.at("timing").at("t_m").get<double>();
  lib.timing.t_plan = j.at("timing").at("t_plan").get<double>();
  for (const auto& b : j.at("bins")) {
    ReachableSet rs;
    rs.bin.bin_id = b.at("bin_id").get<int>();
    rs.bin.p_lo = vec2_from(b.at("p_lo"));
    rs.bin.p_hi = vec2_from(b.at("p_hi"));
    rs.bin.v0_lo = b.at("v0_lo").get<double>();
    rs.bin.v0_hi = b.at("v0_hi").get<double>();
    for (const auto& e : b.at("intervals")) {
      ReachInterval ri;
      ri.c_base = vec2_from(e.at("c_base"));
      ri.c_v0 = {e.at("C").at(0).at(0).get<double>(), e.at("C").at(1).at(0).get<double>()};
      ri.a = {e.at("A").at(0).at(0).get<double>(), e.at("A").at(0).at(1).get<double>(),
              e.at("A").at(1).at(0).get<double>(), e.at("A").at(1).at(1).get<double>()};
      for (const auto& g : e.at("G")) ri.generators.push_back(vec2_from(g));
      rs.intervals.push_back(std::move(ri));
    }
    lib.bins.push_back(std::move(rs));
  }
  return lib;
}

void save_frs(const FrsLibrary& lib, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_frs: cannot open " + path);
  out << frs_to_json(lib);
}

FrsLibrary load_frs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_frs: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return frs_from_json(ss.str());
}

}  // namespace zonoplan
