#pragma once

#include <string>
#include <vector>

#include "zonoplan/vec2.hpp"

namespace zonoplan {

/// Centrally symmetric convex set: center plus symmetric generator spans.
/// All public constructors normalize the generator list (zero generators
/// dropped, parallel generators merged, canonical orientation/ordering), so a
/// Zonotope value always satisfies the vertex-enumeration preconditions when
/// it has at least one generator.
class Zonotope {
 public:
  Zonotope() = default;
  Zonotope(Vec2 center, std::vector<Vec2> generators);

  static Zonotope point(Vec2 center) { return Zonotope(center, {}); }
  /// Axis-aligned box from componentwise bounds. Throws std::invalid_argument
  /// if lo > hi in any component. Degenerate extents yield fewer generators.
  static Zonotope from_interval(Vec2 lo, Vec2 hi);

  const Vec2& center() const { return center_; }
  const std::vector<Vec2>& generators() const { return generators_; }
  std::size_t generator_count() const { return generators_.size(); }
  bool is_point() const { return generators_.empty(); }

  /// Support function value max_{x in Z} <x, dir>.
  double support(const Vec2& dir) const;
  /// Sum of generator norms; radius of the set around its center.
  double radius() const;

  Zonotope translated(const Vec2& t) const;

 private:
  Vec2 center_;
  std::vector<Vec2> generators_;  // canonical: upper half-plane, angle-sorted
};

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b);
Zonotope linear_map(const Mat2& m, const Zonotope& z);

/// Convex polygon in strictly counterclockwise order, first vertex
/// lexicographically smallest (x, then y).
struct VertexPolygon {
  std::vector<Vec2> vertices;

  std::size_t size() const { return vertices.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices[i]; }
};

/// Enumerates the 2m vertices of a zonotope with m >= 1 generators.
/// Throws std::invalid_argument for point zonotopes (m == 0); callers handle
/// those separately.
VertexPolygon enumerate_vertices(const Zonotope& z);

/// Half-plane membership test against a CCW convex polygon; boundary points
/// (within 1e-12) count as inside.
bool contains_point(const VertexPolygon& poly, const Vec2& x);

std::string to_json_string(const Zonotope& z);
Zonotope zonotope_from_json_string(const std::string& text);

}  // namespace zonoplan
