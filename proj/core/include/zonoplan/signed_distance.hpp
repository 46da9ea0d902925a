#pragma once

#include <cstddef>
#include <vector>

#include "zonoplan/zonotope.hpp"

namespace zonoplan {

struct Segment {
  Vec2 a;
  Vec2 b;

  bool degenerate(double tol = 1e-15) const { return (b - a).norm() <= tol; }
};

struct PointSegmentResult {
  double distance = 0.0;
  double t_star = 0.0;  // clamped projection parameter in [0, 1]
  Vec2 closest;
};

/// Distance from a point to a segment via projection onto the supporting line
/// and clamping to [0, 1]. A degenerate segment reduces to the distance to
/// its first endpoint with t_star = 0.
PointSegmentResult point_segment_distance(const Vec2& x, const Segment& s);

struct SignedDistanceResult {
  double value = 0.0;               // negative when penetrating
  std::size_t obstacle_index = 0;   // minimizing obstacle
  std::size_t segment_index = 0;    // minimizing boundary segment of it
  Vec2 witness;                     // closest boundary point to the query center
};

/// Obstacle zonotope grown by the query zonotope's generators. Reduces the
/// set-to-set distance to a point-to-boundary distance from z's center.
Zonotope buffered_obstacle(const Zonotope& z, const Zonotope& o);

/// Exact signed distance between z and the union of obstacle zonotopes:
/// for each obstacle the distance from z's center to the boundary of the
/// buffered obstacle, negated when the center lies inside it, minimized over
/// obstacles. Ties broken toward the lowest (obstacle, segment) index.
/// Throws std::invalid_argument on an empty obstacle list.
SignedDistanceResult signed_distance_zonotopes(const Zonotope& z,
                                               const std::vector<Zonotope>& obstacles);

/// CCW boundary segments of a zonotope's vertex polygon. m = 1 zonotopes
/// yield the two orientations of the single segment; m = 0 yields none.
std::vector<Segment> boundary_segments(const Zonotope& z);

/// Signed distance from a point to the boundary of a convex CCW polygon,
/// negative when the point is inside. Degenerate polygons (fewer than three
/// vertices) keep a non-negative sign.
double signed_distance_point_polygon(const VertexPolygon& poly, const Vec2& x);

/// Separating-axis overlap test for two convex CCW polygons (touching
/// counts as intersecting).
bool polygons_intersect(const VertexPolygon& a, const VertexPolygon& b);

struct ReachDistanceResult {
  double value = 0.0;
  std::size_t interval_index = 0;  // argmin over the shared index set
};

/// Minimum over time intervals of the signed distance between the reachable
/// slice and the obstacle slice. Both lists must share the same index set.
ReachDistanceResult reachable_set_distance(const std::vector<Zonotope>& reach_slices,
                                           const std::vector<Zonotope>& obstacle_slices);

}  // namespace zonoplan
