#include "zonoplan/zonotope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace zonoplan {
namespace {

constexpr double kZeroGenTol = 1e-12;
constexpr double kParallelTol = 1e-10;  // |sin(angle between)| below this merges
constexpr double kBoundaryTol = 1e-12;

// Flip into the upper half-plane: y > 0, or y == 0 with x > 0.
Vec2 to_upper_half(const Vec2& g) {
  if (g.y < 0.0 || (g.y == 0.0 && g.x < 0.0)) return -g;
  return g;
}

double angle_of(const Vec2& g) {
  double a = std::atan2(g.y, g.x);  // in [0, pi] after to_upper_half
  return a;
}

// Drop near-zero generators, orient the rest into [0, pi), sort by angle and
// merge parallel runs into a single generator whose length is the sum of the
// merged lengths. The represented set is unchanged.
std::vector<Vec2> normalize_generators(std::vector<Vec2> gens) {
  std::vector<Vec2> kept;
  kept.reserve(gens.size());
  for (const Vec2& g : gens) {
    if (!finite(g)) throw std::invalid_argument("zonotope generator is not finite");
    if (g.norm() < kZeroGenTol) continue;
    kept.push_back(to_upper_half(g));
  }
  std::sort(kept.begin(), kept.end(), [](const Vec2& a, const Vec2& b) {
    const double aa = angle_of(a);
    const double ab = angle_of(b);
    if (aa != ab) return aa < ab;
    return a.norm() > b.norm();
  });

  std::vector<Vec2> merged;
  for (const Vec2& g : kept) {
    if (!merged.empty()) {
      Vec2& last = merged.back();
      const double s = std::abs(cross(last, g)) / (last.norm() * g.norm());
      if (s < kParallelTol) {
        // parallel: extend along the existing direction by the projected length
        const Vec2 dir = last * (1.0 / last.norm());
        const double len = last.norm() + std::abs(dot(g, dir));
        last = dir * len;
        continue;
      }
    }
    merged.push_back(g);
  }
  return merged;
}

}  // namespace

Zonotope::Zonotope(Vec2 center, std::vector<Vec2> generators) : center_(center) {
  if (!finite(center_)) throw std::invalid_argument("zonotope center is not finite");
  generators_ = normalize_generators(std::move(generators));
}

Zonotope Zonotope::from_interval(Vec2 lo, Vec2 hi) {
  if (lo.x > hi.x || lo.y > hi.y) {
    throw std::invalid_argument("interval_zonotope: lo > hi");
  }
  const Vec2 c{0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)};
  std::vector<Vec2> gens;
  const double rx = 0.5 * (hi.x - lo.x);
  const double ry = 0.5 * (hi.y - lo.y);
  if (rx > 0.0) gens.push_back({rx, 0.0});
  if (ry > 0.0) gens.push_back({0.0, ry});
  return Zonotope(c, std::move(gens));
}

double Zonotope::support(const Vec2& dir) const {
  double s = dot(center_, dir);
  for (const Vec2& g : generators_) s += std::abs(dot(g, dir));
  return s;
}

double Zonotope::radius() const {
  double r = 0.0;
  for (const Vec2& g : generators_) r += g.norm();
  return r;
}

Zonotope Zonotope::translated(const Vec2& t) const {
  Zonotope z = *this;
  z.center_ += t;
  return z;
}

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
  std::vector<Vec2> gens = a.generators();
  gens.insert(gens.end(), b.generators().begin(), b.generators().end());
  return Zonotope(a.center() + b.center(), std::move(gens));
}

Zonotope linear_map(const Mat2& m, const Zonotope& z) {
  std::vector<Vec2> gens;
  gens.reserve(z.generator_count());
  for (const Vec2& g : z.generators()) gens.push_back(m * g);
  return Zonotope(m * z.center(), std::move(gens));
}

VertexPolygon enumerate_vertices(const Zonotope& z) {
  const auto& gens = z.generators();
  const std::size_t m = gens.size();
  if (m == 0) {
    throw std::invalid_argument("enumerate_vertices: point zonotope has no vertices to enumerate");
  }

  // Generators are already flipped into [0, pi) and angle-sorted by
  // normalization; the cumulative-sign construction below assumes exactly
  // that ordering.
  const Vec2 c = z.center();
  std::vector<Vec2> verts(2 * m);
  for (std::size_t k = 0; k < m; ++k) {
    Vec2 acc{0.0, 0.0};
    for (std::size_t j = 0; j < m; ++j) {
      const double sign = (j >= k) ? 1.0 : -1.0;
      acc += gens[j] * sign;
    }
    verts[k] = c + acc;
    verts[m + k] = c - acc;
  }

  // The construction emits a CCW cycle; rotate so the lexicographically
  // smallest vertex comes first.
  std::size_t best = 0;
  for (std::size_t i = 1; i < verts.size(); ++i) {
    if (verts[i].x < verts[best].x ||
        (verts[i].x == verts[best].x && verts[i].y < verts[best].y)) {
      best = i;
    }
  }
  std::rotate(verts.begin(), verts.begin() + static_cast<std::ptrdiff_t>(best), verts.end());
  return VertexPolygon{std::move(verts)};
}

bool contains_point(const VertexPolygon& poly, const Vec2& x) {
  const std::size_t n = poly.size();
  if (n == 0) return false;
  if (n == 1) return (x - poly[0]).norm() <= kBoundaryTol;
  if (n == 2) {
    // degenerate segment: colinear within tol and inside the extent
    const Vec2 d = poly[1] - poly[0];
    const Vec2 r = x - poly[0];
    if (std::abs(cross(d, r)) > kBoundaryTol * std::max(1.0, d.norm())) return false;
    const double t = dot(r, d) / d.squared_norm();
    return t >= -kBoundaryTol && t <= 1.0 + kBoundaryTol;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if (cross(b - a, x - a) < -kBoundaryTol) return false;
  }
  return true;
}

std::string to_json_string(const Zonotope& z) {
  nlohmann::json j;
  j["c"] = {z.center().x, z.center().y};
  auto& g = j["G"] = nlohmann::json::array();
  for (const Vec2& v : z.generators()) g.push_back({v.x, v.y});
  return j.dump();
}

Zonotope zonotope_from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const Vec2 c{j.at("c").at(0).get<double>(), j.at("c").at(1).get<double>()};
  std::vector<Vec2> gens;
  for (const auto& g : j.at("G")) {
    gens.push_back({g.at(0).get<double>(), g.at(1).get<double>()});
  }
  return Zonotope(c, std::move(gens));
}

}  // namespace zonoplan
