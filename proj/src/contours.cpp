#include "pmap/contours.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pmap {

namespace {

// Corner-lattice directions: E, S, W, N. Right turn is +1 mod 4.
constexpr int kStepX[4] = {1, 0, -1, 0};
constexpr int kStepY[4] = {0, 1, 0, -1};

struct MaskView {
  const Grid* grid;
  std::vector<std::uint8_t> bits;

  explicit MaskView(const InstanceMask& mask)
      : grid(&mask.grid), bits(static_cast<std::size_t>(mask.grid.size()), 0) {
    for (Index p : mask.pixels) bits[static_cast<std::size_t>(p)] = 1;
  }

  bool inside(int col, int row) const {
    return grid->contains(col, row) &&
           bits[static_cast<std::size_t>(grid->index_of(col, row))];
  }
};

// The pixels flanking the crack edge leaving corner (x, y) in direction d;
// the walk may take the edge iff `in` is a mask pixel and `out` is not.
void edge_pixels(int x, int y, int dir, int& in_c, int& in_r, int& out_c, int& out_r) {
  switch (dir) {
    case 0:  // E
      in_c = x; in_r = y; out_c = x; out_r = y - 1;
      break;
    case 1:  // S
      in_c = x - 1; in_r = y; out_c = x; out_r = y;
      break;
    case 2:  // W
      in_c = x - 1; in_r = y - 1; out_c = x - 1; out_r = y;
      break;
    default:  // N
      in_c = x; in_r = y - 1; out_c = x - 1; out_r = y - 1;
      break;
  }
}

bool can_walk(const MaskView& mask, int x, int y, int dir) {
  int ic, ir, oc, orr;
  edge_pixels(x, y, dir, ic, ir, oc, orr);
  return mask.inside(ic, ir) && !mask.inside(oc, orr);
}

std::vector<Vec2> trace_ring(const InstanceMask& mask) {
  const MaskView view(mask);

  const Index start_pixel = *std::min_element(mask.pixels.begin(), mask.pixels.end());
  const int sx = mask.grid.col_of(start_pixel);
  const int sy = mask.grid.row_of(start_pixel);
  const int start_dir = 0;  // E along the top edge of the topmost-leftmost pixel

  std::vector<Vec2> ring;
  int x = sx, y = sy, dir = start_dir;
  do {
    x += kStepX[dir];
    y += kStepY[dir];
    // Try right turn, straight, left, back, in that order (mask on the right).
    int next = (dir + 1) % 4;
    for (int t = 0; t < 4; ++t) {
      if (can_walk(view, x, y, next)) break;
      next = (next + 3) % 4;
    }
    if (next != dir) ring.emplace_back(x, y);
    dir = next;
  } while (x != sx || y != sy || dir != start_dir);

  // Rotate so the ring starts at the first corner after the start vertex.
  ring.insert(ring.begin(), Vec2(sx, sy));
  if ((ring.back() - ring.front()).squaredNorm() == 0.0) ring.pop_back();
  return ring;
}

double chord_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len = ab.norm();
  if (len == 0.0) return (p - a).norm();
  return std::abs(ab.x() * (p.y() - a.y()) - ab.y() * (p.x() - a.x())) / len;
}

void dp_recurse(const std::vector<Vec2>& chain, std::size_t lo, std::size_t hi,
                double eps, std::vector<char>& keep) {
  if (hi <= lo + 1) return;
  double worst = -1.0;
  std::size_t split = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = chord_distance(chain[i], chain[lo], chain[hi]);
    if (d > worst) {
      worst = d;
      split = i;
    }
  }
  if (worst > eps) {
    keep[split] = 1;
    dp_recurse(chain, lo, split, eps, keep);
    dp_recurse(chain, split, hi, eps, keep);
  }
}

// Mask pixel centers sit half a pixel inside the traced ring, so any chord
// deviating by half a pixel or more can flip a center across the boundary.
// Capping the tolerance just below that keeps the rasterize-back contract
// (nearly full coverage, nearly zero extras) while still flattening the
// one-pixel staircases that dominate traced rings.
constexpr double kHalfPixelGuard = 0.45;

}  // namespace

std::vector<Vec2> simplify_polyline(const std::vector<Vec2>& chain, double eps) {
  const std::size_t n = chain.size();
  if (n <= 2) return chain;
  std::vector<char> keep(n, 0);
  keep[0] = 1;
  keep[n - 1] = 1;
  dp_recurse(chain, 0, n - 1, eps, keep);
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (keep[i]) out.push_back(chain[i]);
  }
  return out;
}

TextPolygon trace_polygon(const InstanceMask& mask, double simplify_eps) {
  if (mask.empty()) throw EmptyInstance("trace_polygon: empty mask");

  std::vector<Vec2> ring = trace_ring(mask);

  std::vector<Vec2> simplified = ring;
  if (simplify_eps > 0.0 && ring.size() > 3) {
    // Split the closed ring at its two mutually farthest anchor vertices and
    // simplify each open chain.
    std::size_t far = 1;
    double best = -1.0;
    for (std::size_t i = 1; i < ring.size(); ++i) {
      const double d = (ring[i] - ring[0]).squaredNorm();
      if (d > best) {
        best = d;
        far = i;
      }
    }
    std::vector<Vec2> a(ring.begin(), ring.begin() + far + 1);
    std::vector<Vec2> b(ring.begin() + far, ring.end());
    b.push_back(ring.front());
    const double eps = std::min(simplify_eps, kHalfPixelGuard);
    const auto sa = simplify_polyline(a, eps);
    const auto sb = simplify_polyline(b, eps);
    simplified.assign(sa.begin(), sa.end() - 1);
    simplified.insert(simplified.end(), sb.begin(), sb.end() - 1);
  }

  if (simplified.size() < 3 || signed_area(simplified) == 0.0) {
    simplified = std::move(ring);  // tiny masks: keep the exact ring
  }
  TextPolygon poly = make_polygon(std::move(simplified),
                                  std::to_string(mask.label));
  if (signed_area(poly) < 0) {
    std::reverse(poly.vertices.begin(), poly.vertices.end());
  }
  return poly;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const Vec2& a, const Vec2& b) {
                             return a.x() == b.x() && a.y() == b.y();
                           }),
               points.end());
  const std::size_t n = points.size();
  if (n < 3) return points;

  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };

  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Vec2> min_area_rect_of_points(const std::vector<Vec2>& points) {
  std::vector<Vec2> hull = convex_hull(points);
  const std::size_t m = hull.size();
  if (m == 0) throw EmptyInstance("min_area_rect: no points");
  if (m < 3) {
    // Degenerate hull: return a zero-thickness box along the segment.
    const Vec2 a = hull.front(), b = hull.back();
    return {a, b, b, a};
  }

  constexpr double kEps = 1e-12;
  auto edge = [&](std::size_t t) { return hull[(t + 1) % m] - hull[t % m]; };

  double best_area = std::numeric_limits<double>::infinity();
  std::vector<Vec2> best;
  std::size_t j = 0, k = 0, l = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 u = edge(i).normalized();
    const Vec2 v(-u.y(), u.x());

    j = std::max(j, i + 1);
    while (u.dot(edge(j)) > kEps) ++j;
    k = std::max(k, j);
    while (u.x() * edge(k).y() - u.y() * edge(k).x() > kEps) ++k;
    l = std::max(l, k);
    while (u.dot(edge(l)) < -kEps) ++l;

    const Vec2 base = hull[i];
    const double max_u = u.dot(hull[j % m] - base);
    const double max_v = v.dot(hull[k % m] - base);
    const double min_u = u.dot(hull[l % m] - base);
    const double area = (max_u - min_u) * max_v;
    if (area < best_area) {
      best_area = area;
      const Vec2 c0 = base + min_u * u;
      const Vec2 c1 = base + max_u * u;
      best = {c0, c1, c1 + max_v * v, c0 + max_v * v};
    }
  }
  return best;
}

TextPolygon min_area_rect(const InstanceMask& mask) {
  if (mask.empty()) throw EmptyInstance("min_area_rect: empty mask");

  // Corners of boundary pixels carry every extreme point of the pixel union.
  const MaskView view(mask);
  std::vector<Vec2> corners;
  for (Index p : mask.pixels) {
    const int c = mask.grid.col_of(p), r = mask.grid.row_of(p);
    const bool boundary = !view.inside(c - 1, r) || !view.inside(c + 1, r) ||
                          !view.inside(c, r - 1) || !view.inside(c, r + 1);
    if (!boundary) continue;
    corners.emplace_back(c, r);
    corners.emplace_back(c + 1, r);
    corners.emplace_back(c + 1, r + 1);
    corners.emplace_back(c, r + 1);
  }

  return make_polygon(min_area_rect_of_points(corners),
                      std::to_string(mask.label));
}

BoundaryMode parse_boundary_mode(const std::string& name) {
  if (name == "polygon") return BoundaryMode::polygon;
  if (name == "rect") return BoundaryMode::rect;
  throw Error("unknown boundary mode: " + name);
}

std::string to_string(BoundaryMode mode) {
  return mode == BoundaryMode::polygon ? "polygon" : "rect";
}

DetectionBoundary extract_boundary(const InstanceMask& mask,
                                   const ProbabilityMap& last_map,
                                   BoundaryMode mode, double simplify_eps) {
  if (mask.grid != last_map.grid) throw ShapeMismatch("extract_boundary: grid mismatch");
  DetectionBoundary det;
  det.mode = mode;
  det.polygon = mode == BoundaryMode::polygon ? trace_polygon(mask, simplify_eps)
                                              : min_area_rect(mask);
  const double* values = last_map.values.data();
  double sum = 0.0;
  for (Index p : mask.pixels) sum += values[p];
  det.score = sum / static_cast<double>(mask.pixels.size());
  return det;
}

}  // namespace pmap
