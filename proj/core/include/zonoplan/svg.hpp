#pragma once

#include <string>
#include <vector>

#include "zonoplan/highway.hpp"
#include "zonoplan/planner.hpp"

namespace zonoplan {

/// One planning-iteration frame: lanes, obstacles, chosen reachable slices,
/// waypoint and the executed trajectory so far.
struct SvgFrame {
  HighwayConfig highway;
  double t = 0.0;
  EgoState ego;
  std::vector<ObstacleState> obstacles;  // positions taken at t
  std::vector<VertexPolygon> reach_polys;
  Waypoint waypoint;
  std::vector<Vec2> trajectory;
  EgoFootprint footprint;
};

void write_svg_frame(const std::string& path, const SvgFrame& frame);

}  // namespace zonoplan
