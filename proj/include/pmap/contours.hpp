#pragma once

#include <string>
#include <vector>

#include "pmap/core.hpp"
#include "pmap/geometry.hpp"
#include "pmap/probmap.hpp"

namespace pmap {

enum class BoundaryMode { polygon, rect };

BoundaryMode parse_boundary_mode(const std::string& name);
std::string to_string(BoundaryMode mode);

// Final detection: a boundary polygon plus the mean probability of the source
// mask under the last predicted map.
struct DetectionBoundary {
  TextPolygon polygon;
  double score = 0.0;
  BoundaryMode mode = BoundaryMode::polygon;
};

// Outer boundary of the mask on the pixel-corner lattice (crack following
// with the mask kept on the right), simplified with Douglas-Peucker. Vertices
// are counter-clockwise (positive shoelace area). Falls back to the
// unsimplified ring when simplification would degenerate the polygon.
TextPolygon trace_polygon(const InstanceMask& mask, double simplify_eps = 1.0);

// Minimum-area rotated rectangle of the mask's pixel-corner hull, found by
// rotating calipers over the convex hull edges.
TextPolygon min_area_rect(const InstanceMask& mask);

// Counter-clockwise convex hull (Andrew monotone chain), no collinear points.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

// Minimum-area rectangle of a point set; 4 CCW corners.
std::vector<Vec2> min_area_rect_of_points(const std::vector<Vec2>& points);

// Douglas-Peucker simplification of an open polyline, endpoints kept.
std::vector<Vec2> simplify_polyline(const std::vector<Vec2>& chain, double eps);

DetectionBoundary extract_boundary(const InstanceMask& mask,
                                   const ProbabilityMap& last_map,
                                   BoundaryMode mode, double simplify_eps = 1.0);

}  // namespace pmap
