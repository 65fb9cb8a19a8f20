#pragma once

#include <span>
#include <string>
#include <vector>

#include "pmap/core.hpp"

namespace pmap {

// Closed polygon boundary of a text instance, vertices in pixel coordinates
// (x right, y down). The last vertex connects back to the first.
struct TextPolygon {
  std::vector<Vec2> vertices;
  std::string id;
  bool ignore = false;
};

// Normalizes a vertex list into a valid polygon: drops consecutive duplicate
// vertices (including a duplicated closing vertex) and rejects anything with
// fewer than 3 distinct vertices or zero signed area.
TextPolygon make_polygon(std::vector<Vec2> vertices, std::string id = "",
                         bool ignore = false);

// Shoelace area; positive for counter-clockwise vertex order (y-down axes).
double signed_area(std::span<const Vec2> vertices);
double signed_area(const TextPolygon& poly);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

// Nonzero winding number of `point` with respect to the closed polygon.
int winding_number(const TextPolygon& poly, const Vec2& point);

// Shortest distance from `point` to the polygon boundary (min over segments).
double boundary_distance(const TextPolygon& poly, const Vec2& point);

// True when `point` lies inside under the nonzero winding rule; points on the
// boundary curve count as inside.
bool contains_point(const TextPolygon& poly, const Vec2& point);

// All grid pixels whose centers lie inside the polygon (nonzero winding rule,
// boundary-inclusive), as sorted row-major indices.
std::vector<Index> rasterize_interior(const TextPolygon& poly, const Grid& grid);

// Per-pixel shortest boundary distances for an instance interior.
struct DistanceFragment {
  std::vector<Index> pixels;      // sorted row-major
  std::vector<double> distance;   // parallel to pixels

  bool empty() const { return pixels.empty(); }
  std::size_t size() const { return pixels.size(); }
};

// Exact point-to-segment distances from each pixel center to the polygon
// boundary. `pixels` must be a subset of rasterize_interior(poly, grid).
DistanceFragment distance_to_boundary(const TextPolygon& poly, const Grid& grid,
                                      std::span<const Index> pixels);

// Instance scale L: the largest interior distance, clamped to >= 1 px so that
// normalization stays stable for 1-2 px instances.
double instance_scale(const DistanceFragment& fragment);

// Per-pixel distance map over a whole grid; pixels outside all instances are 0.
struct DistanceMap {
  Grid grid;
  Array2d values;
};

// Assembles per-instance fragments into one full-grid map. Overlapping pixels
// keep the larger distance.
DistanceMap assemble_distance_map(std::span<const TextPolygon> polys,
                                  const Grid& grid);

// Distance from each mask pixel center to the nearest boundary-pixel center,
// where a boundary pixel is a mask pixel with a 4-neighbor outside the mask or
// outside the grid. Exact Euclidean distance transform.
DistanceFragment mask_distance_map(const InstanceMask& mask);

}  // namespace pmap
