#include "zonoplan/signed_distance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace zonoplan {

PointSegmentResult point_segment_distance(const Vec2& x, const Segment& s) {
  const Vec2 d = s.b - s.a;
  const double dd = d.squared_norm();
  if (dd <= 1e-30) {
    return {(x - s.a).norm(), 0.0, s.a};
  }
  const double t_hat = dot(x - s.a, d) / dd;
  const double t_star = std::min(std::max(t_hat, 0.0), 1.0);
  const Vec2 closest = s.a + d * t_star;
  return {(x - closest).norm(), t_star, closest};
}

Zonotope buffered_obstacle(const Zonotope& z, const Zonotope& o) {
  std::vector<Vec2> gens = z.generators();
  gens.insert(gens.end(), o.generators().begin(), o.generators().end());
  return Zonotope(o.center(), std::move(gens));
}

std::vector<Segment> boundary_segments(const Zonotope& z) {
  if (z.is_point()) return {};
  const VertexPolygon poly = enumerate_vertices(z);
  const std::size_t n = poly.size();
  std::vector<Segment> segs;
  segs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    segs.push_back({poly[i], poly[(i + 1) % n]});
  }
  return segs;
}

double signed_distance_point_polygon(const VertexPolygon& poly, const Vec2& x) {
  const std::size_t n = poly.size();
  if (n == 0) throw std::invalid_argument("signed_distance_point_polygon: empty polygon");
  if (n == 1) return (x - poly[0]).norm();
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < n; ++l) {
    const Segment seg{poly[l], poly[(l + 1) % n]};
    min_dist = std::min(min_dist, point_segment_distance(x, seg).distance);
  }
  const bool inside = n > 2 && contains_point(poly, x);
  return inside ? -min_dist : min_dist;
}

namespace {

bool separating_axis(const VertexPolygon& a, const VertexPolygon& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec2 edge = a[(i + 1) % a.size()] - a[i];
    const Vec2 axis{edge.y, -edge.x};  // outward for CCW
    bool all_outside = true;
    for (const Vec2& v : b.vertices) {
      if (dot(axis, v - a[i]) <= 0.0) {
        all_outside = false;
        break;
      }
    }
    if (all_outside) return true;
  }
  return false;
}

}  // namespace

bool polygons_intersect(const VertexPolygon& a, const VertexPolygon& b) {
  if (a.size() == 0 || b.size() == 0) return false;
  return !separating_axis(a, b) && !separating_axis(b, a);
}

SignedDistanceResult signed_distance_zonotopes(const Zonotope& z,
                                               const std::vector<Zonotope>& obstacles) {
  if (obstacles.empty()) {
    throw std::invalid_argument("signed_distance_zonotopes: no obstacles");
  }
  const Vec2 c = z.center();

  SignedDistanceResult best;
  bool have_best = false;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const Zonotope buffered = buffered_obstacle(z, obstacles[i]);

    double value;
    std::size_t seg_index = 0;
    Vec2 witness;
    if (buffered.is_point()) {
      // point-vs-point: boundary of a measure-zero set, penetration depth 0
      value = (c - buffered.center()).norm();
      witness = buffered.center();
    } else {
      const VertexPolygon poly = enumerate_vertices(buffered);
      const std::size_t n = poly.size();
      double min_dist = std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < n; ++l) {
        const Segment seg{poly[l], poly[(l + 1) % n]};
        const PointSegmentResult r = point_segment_distance(c, seg);
        if (r.distance < min_dist) {
          min_dist = r.distance;
          seg_index = l;
          witness = r.closest;
        }
      }
      // A 2-vertex polygon is a segment: measure zero, sign stays positive.
      const bool inside = n > 2 && contains_point(poly, c);
      value = inside ? -min_dist : min_dist;
    }

    if (!have_best || value < best.value) {
      best = {value, i, seg_index, witness};
      have_best = true;
    }
  }
  return best;
}

ReachDistanceResult reachable_set_distance(const std::vector<Zonotope>& reach_slices,
                                           const std::vector<Zonotope>& obstacle_slices) {
  if (reach_slices.size() != obstacle_slices.size() || reach_slices.empty()) {
    throw std::invalid_argument("reachable_set_distance: interval index sets do not match");
  }
  ReachDistanceResult best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t j = 0; j < reach_slices.size(); ++j) {
    const SignedDistanceResult r =
        signed_distance_zonotopes(reach_slices[j], {obstacle_slices[j]});
    if (r.value < best.value) {
      best = {r.value, j};
    }
  }
  return best;
}

}  // namespace zonoplan
