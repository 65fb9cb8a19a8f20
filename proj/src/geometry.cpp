#include "pmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace pmap {

namespace {

constexpr double kBoundaryTol = 1e-9;

// Crossing of a polygon edge with a horizontal scanline, carrying the winding
// direction of the edge (+1 downward, -1 upward).
struct Crossing {
  double x;
  int dir;
};

}  // namespace

Array2u8 mask_to_image(const InstanceMask& mask) {
  Array2u8 img = Array2u8::Zero(mask.grid.height, mask.grid.width);
  for (Index p : mask.pixels) img.data()[p] = 1;
  return img;
}

TextPolygon make_polygon(std::vector<Vec2> vertices, std::string id, bool ignore) {
  std::vector<Vec2> cleaned;
  cleaned.reserve(vertices.size());
  for (const Vec2& v : vertices) {
    if (cleaned.empty() || (cleaned.back() - v).squaredNorm() > 0.0) {
      cleaned.push_back(v);
    }
  }
  while (cleaned.size() > 1 && (cleaned.front() - cleaned.back()).squaredNorm() == 0.0) {
    cleaned.pop_back();
  }
  if (cleaned.size() < 3) {
    throw DegeneratePolygon("polygon '" + id + "': fewer than 3 distinct vertices");
  }
  if (signed_area(cleaned) == 0.0) {
    throw DegeneratePolygon("polygon '" + id + "': zero signed area");
  }
  return TextPolygon{std::move(cleaned), std::move(id), ignore};
}

double signed_area(std::span<const Vec2> vertices) {
  const std::size_t n = vertices.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

double signed_area(const TextPolygon& poly) { return signed_area(poly.vertices); }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  // Work in the segment frame; the result depends only on coordinate
  // differences, which keeps integer translations exact.
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return ap.norm();
  const double t = std::clamp(ap.dot(ab) / len2, 0.0, 1.0);
  return (ap - t * ab).norm();
}

int winding_number(const TextPolygon& poly, const Vec2& point) {
  // Half-open crossing rule on the y coordinate keeps vertex hits consistent.
  int winding = 0;
  const auto& vs = poly.vertices;
  const std::size_t n = vs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vs[i];
    const Vec2& b = vs[(i + 1) % n];
    if (a.y() == b.y()) continue;
    const bool downward = b.y() > a.y();
    const double ylo = downward ? a.y() : b.y();
    const double yhi = downward ? b.y() : a.y();
    if (point.y() < ylo || point.y() >= yhi) continue;
    const double cross =
        (b.x() - a.x()) * (point.y() - a.y()) - (point.x() - a.x()) * (b.y() - a.y());
    if (downward) {
      if (cross > 0) ++winding;
    } else {
      if (cross < 0) --winding;
    }
  }
  return winding;
}

double boundary_distance(const TextPolygon& poly, const Vec2& point) {
  const auto& vs = poly.vertices;
  const std::size_t n = vs.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, point_segment_distance(point, vs[i], vs[(i + 1) % n]));
  }
  return best;
}

bool contains_point(const TextPolygon& poly, const Vec2& point) {
  if (winding_number(poly, point) != 0) return true;
  return boundary_distance(poly, point) <= kBoundaryTol;
}

std::vector<Index> rasterize_interior(const TextPolygon& poly, const Grid& grid) {
  const auto& vs = poly.vertices;
  const std::size_t n = vs.size();

  double minx = vs[0].x(), maxx = vs[0].x();
  double miny = vs[0].y(), maxy = vs[0].y();
  for (const Vec2& v : vs) {
    minx = std::min(minx, v.x());
    maxx = std::max(maxx, v.x());
    miny = std::min(miny, v.y());
    maxy = std::max(maxy, v.y());
  }

  const int row_lo = std::max(0, static_cast<int>(std::floor(miny - 0.5)));
  const int row_hi = std::min(grid.height - 1, static_cast<int>(std::ceil(maxy - 0.5)));
  const int col_lo = std::max(0, static_cast<int>(std::floor(minx - 0.5)));
  const int col_hi = std::min(grid.width - 1, static_cast<int>(std::ceil(maxx - 0.5)));
  if (row_lo > row_hi || col_lo > col_hi) return {};

  std::vector<std::uint8_t> marked(
      static_cast<std::size_t>(row_hi - row_lo + 1) * (col_hi - col_lo + 1), 0);
  const int span_w = col_hi - col_lo + 1;
  auto mark = [&](int col, int row) {
    if (col < col_lo || col > col_hi || row < row_lo || row > row_hi) return;
    marked[static_cast<std::size_t>(row - row_lo) * span_w + (col - col_lo)] = 1;
  };

  // Scanline fill under the nonzero winding rule.
  std::vector<Crossing> crossings;
  for (int row = row_lo; row <= row_hi; ++row) {
    const double y = row + 0.5;
    crossings.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = vs[i];
      const Vec2& b = vs[(i + 1) % n];
      if (a.y() == b.y()) continue;
      const bool downward = b.y() > a.y();
      const double ylo = downward ? a.y() : b.y();
      const double yhi = downward ? b.y() : a.y();
      if (y < ylo || y >= yhi) continue;
      const double t = (y - a.y()) / (b.y() - a.y());
      crossings.push_back({a.x() + t * (b.x() - a.x()), downward ? 1 : -1});
    }
    std::sort(crossings.begin(), crossings.end(),
              [](const Crossing& l, const Crossing& r) { return l.x < r.x; });

    std::size_t k = 0;
    int winding = 0;
    for (int col = col_lo; col <= col_hi; ++col) {
      const double x = col + 0.5;
      while (k < crossings.size() && crossings[k].x < x) {
        winding += crossings[k].dir;
        ++k;
      }
      if (winding != 0) mark(col, row);
    }
  }

  // Pixels whose centers lie exactly on the boundary count as inside. Walk
  // each segment and test the nearby centers.
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vs[i];
    const Vec2& b = vs[(i + 1) % n];
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
    for (int s = 0; s <= steps; ++s) {
      const Vec2 q = a + (static_cast<double>(s) / steps) * (b - a);
      const int c0 = static_cast<int>(std::floor(q.x() - 0.5));
      const int r0 = static_cast<int>(std::floor(q.y() - 0.5));
      for (int dr = 0; dr <= 1; ++dr) {
        for (int dc = 0; dc <= 1; ++dc) {
          const int col = c0 + dc, row = r0 + dr;
          const Vec2 center(col + 0.5, row + 0.5);
          if (point_segment_distance(center, a, b) <= kBoundaryTol) mark(col, row);
        }
      }
    }
  }

  std::vector<Index> pixels;
  for (int row = row_lo; row <= row_hi; ++row) {
    for (int col = col_lo; col <= col_hi; ++col) {
      if (marked[static_cast<std::size_t>(row - row_lo) * span_w + (col - col_lo)]) {
        pixels.push_back(grid.index_of(col, row));
      }
    }
  }
  return pixels;
}

DistanceFragment distance_to_boundary(const TextPolygon& poly, const Grid& grid,
                                      std::span<const Index> pixels) {
  DistanceFragment frag;
  frag.pixels.assign(pixels.begin(), pixels.end());
  frag.distance.resize(frag.pixels.size());
  const auto& vs = poly.vertices;
  const std::size_t n = vs.size();
  for (std::size_t k = 0; k < frag.pixels.size(); ++k) {
    const Vec2 c = grid.center(frag.pixels[k]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      best = std::min(best, point_segment_distance(c, vs[i], vs[(i + 1) % n]));
    }
    frag.distance[k] = best;
  }
  return frag;
}

double instance_scale(const DistanceFragment& fragment) {
  if (fragment.empty()) throw EmptyInstance("instance_scale: empty fragment");
  double raw = 0.0;
  for (double d : fragment.distance) raw = std::max(raw, d);
  return std::max(raw, 1.0);
}

DistanceMap assemble_distance_map(std::span<const TextPolygon> polys,
                                  const Grid& grid) {
  DistanceMap map{grid, Array2d::Zero(grid.height, grid.width)};
  for (const TextPolygon& poly : polys) {
    const auto pixels = rasterize_interior(poly, grid);
    const DistanceFragment frag = distance_to_boundary(poly, grid, pixels);
    for (std::size_t k = 0; k < frag.size(); ++k) {
      double& cell = map.values.data()[frag.pixels[k]];
      cell = std::max(cell, frag.distance[k]);
    }
  }
  return map;
}

namespace {

// 1D squared-distance lower envelope (Felzenszwalb-Huttenlocher). Cells with
// infinite f contribute no parabola; a line without sources stays infinite.
void edt_1d(const std::vector<double>& f, std::vector<double>& out,
            std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  out.assign(n, kInf);
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  auto intersect = [&](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
           (2.0 * q - 2.0 * p);
  };
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) return;
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

DistanceFragment mask_distance_map(const InstanceMask& mask) {
  if (mask.empty()) throw EmptyInstance("mask_distance_map: empty mask");
  const Grid& grid = mask.grid;

  int cmin = grid.width, cmax = -1, rmin = grid.height, rmax = -1;
  for (Index p : mask.pixels) {
    const int c = grid.col_of(p), r = grid.row_of(p);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  const int bw = cmax - cmin + 1, bh = rmax - rmin + 1;

  Array2u8 in = Array2u8::Zero(bh, bw);
  for (Index p : mask.pixels) {
    in(grid.row_of(p) - rmin, grid.col_of(p) - cmin) = 1;
  }

  auto inside = [&](int c, int r) {
    return c >= 0 && c < bw && r >= 0 && r < bh && in(r, c) != 0;
  };
  // Boundary pixel: in the mask with a 4-neighbor outside the mask or grid.
  // Grid-clipped edges of the bounding box see the true grid border.
  auto is_boundary = [&](int c, int r) {
    const int gc = c + cmin, gr = r + rmin;
    static constexpr int dc[4] = {1, -1, 0, 0};
    static constexpr int dr[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nc = gc + dc[k], nr = gr + dr[k];
      if (!grid.contains(nc, nr)) return true;
      if (!inside(c + dc[k], r + dr[k])) return true;
    }
    return false;
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  Array2d sq(bh, bw);
  for (int r = 0; r < bh; ++r) {
    for (int c = 0; c < bw; ++c) {
      sq(r, c) = (in(r, c) && is_boundary(c, r)) ? 0.0 : kInf;
    }
  }

  // Two separable passes over squared distances give the exact Euclidean
  // transform to the boundary-pixel centers.
  std::vector<double> f, out;
  std::vector<int> v;
  std::vector<double> z;
  for (int c = 0; c < bw; ++c) {
    f.resize(bh);
    for (int r = 0; r < bh; ++r) f[r] = sq(r, c);
    edt_1d(f, out, v, z);
    for (int r = 0; r < bh; ++r) sq(r, c) = out[r];
  }
  for (int r = 0; r < bh; ++r) {
    f.resize(bw);
    for (int c = 0; c < bw; ++c) f[c] = sq(r, c);
    edt_1d(f, out, v, z);
    for (int c = 0; c < bw; ++c) sq(r, c) = out[c];
  }

  DistanceFragment frag;
  frag.pixels = mask.pixels;
  std::sort(frag.pixels.begin(), frag.pixels.end());
  frag.distance.resize(frag.pixels.size());
  for (std::size_t k = 0; k < frag.pixels.size(); ++k) {
    const Index p = frag.pixels[k];
    frag.distance[k] = std::sqrt(sq(grid.row_of(p) - rmin, grid.col_of(p) - cmin));
  }
  return frag;
}

}  // namespace pmap
