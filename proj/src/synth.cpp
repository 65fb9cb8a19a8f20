#include "pmap/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace pmap {

namespace {

// Self-contained uniform/normal draws so synthetic data does not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }
  int pick(int count) {
    return std::min(count - 1, static_cast<int>(uniform() * count));
  }
  double normal() {
    const double u1 = std::max(uniform(), 0x1.0p-53);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

bool segments_intersect(const Vec2& a1, const Vec2& a2, const Vec2& b1,
                        const Vec2& b2) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const double v = (q.x() - p.x()) * (r.y() - p.y()) -
                     (q.y() - p.y()) * (r.x() - p.x());
    return (v > 0) - (v < 0);
  };
  const int o1 = orient(a1, a2, b1), o2 = orient(a1, a2, b2);
  const int o3 = orient(b1, b2, a1), o4 = orient(b1, b2, a2);
  if (o1 != o2 && o3 != o4) return true;
  auto on_segment = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::min(p.x(), r.x()) <= q.x() && q.x() <= std::max(p.x(), r.x()) &&
           std::min(p.y(), r.y()) <= q.y() && q.y() <= std::max(p.y(), r.y());
  };
  if (o1 == 0 && on_segment(a1, b1, a2)) return true;
  if (o2 == 0 && on_segment(a1, b2, a2)) return true;
  if (o3 == 0 && on_segment(b1, a1, b2)) return true;
  if (o4 == 0 && on_segment(b1, a2, b2)) return true;
  return false;
}

double segment_distance(const Vec2& a1, const Vec2& a2, const Vec2& b1,
                        const Vec2& b2) {
  if (segments_intersect(a1, a2, b1, b2)) return 0.0;
  return std::min({point_segment_distance(a1, b1, b2),
                   point_segment_distance(a2, b1, b2),
                   point_segment_distance(b1, a1, a2),
                   point_segment_distance(b2, a1, a2)});
}

bool polygon_contains_polygon(const TextPolygon& outer, const TextPolygon& inner) {
  return contains_point(outer, inner.vertices.front());
}

// Text-like proportions: elongated, width a modest fraction of the grid.
double sample_width(Rng& rng, const Grid& grid) {
  const double min_dim = std::min(grid.width, grid.height);
  return std::clamp(rng.uniform(0.10, 0.125) * min_dim, 4.0, 48.0);
}

double sample_length(Rng& rng, const Grid& grid, double w, double aspect) {
  const double lo = std::min(aspect * w, 0.45 * grid.width);
  const double hi = std::max(lo + 2.0, std::min(0.7 * grid.width, 8.0 * w));
  return rng.uniform(lo, hi);
}

std::vector<Vec2> sample_rect(Rng& rng, const Grid& grid, bool rotated) {
  const double w = sample_width(rng, grid);
  const double len = sample_length(rng, grid, w, 4.0);
  const double theta = rotated ? rng.uniform(0.0, std::numbers::pi) : 0.0;
  const Vec2 u(std::cos(theta), std::sin(theta));
  const Vec2 v(-u.y(), u.x());
  const Vec2 c(rng.uniform(0.0, grid.width), rng.uniform(0.0, grid.height));
  const Vec2 a = 0.5 * len * u;
  const Vec2 b = 0.5 * w * v;
  return {c - a - b, c + a - b, c + a + b, c - a + b};
}

std::vector<Vec2> sample_band(Rng& rng, const Grid& grid) {
  const double w = sample_width(rng, grid);
  const double len = sample_length(rng, grid, w, 4.0);
  const double amp = rng.uniform(0.04, 0.10) * len;
  const double freq = rng.uniform(0.5, 1.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const Vec2 u(std::cos(theta), std::sin(theta));
  const Vec2 v(-u.y(), u.x());
  const Vec2 start(rng.uniform(0.0, grid.width), rng.uniform(0.0, grid.height));

  // 7 midline samples, offset by half the width on each side: 14 vertices,
  // the polygonization used by curved-text annotations.
  constexpr int kSamples = 7;
  std::vector<Vec2> top(kSamples), bottom(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    const double t = static_cast<double>(i) / (kSamples - 1);
    const Vec2 m = start + t * len * u +
                   amp * std::sin(2.0 * std::numbers::pi * freq * t + phase) * v;
    top[i] = m + 0.5 * w * v;
    bottom[i] = m - 0.5 * w * v;
  }
  std::vector<Vec2> vertices = std::move(top);
  vertices.insert(vertices.end(), bottom.rbegin(), bottom.rend());
  return vertices;
}

bool is_simple(const std::vector<Vec2>& vs) {
  const std::size_t n = vs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a1 = vs[i];
    const Vec2& a2 = vs[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(a1, a2, vs[j], vs[(j + 1) % n])) return false;
    }
  }
  return true;
}

}  // namespace

ProbabilityStack oracle_stack(std::span<const TextPolygon> polys, const Grid& grid,
                              const AlphaSchedule& schedule) {
  return generate_label_stack(polys, grid, schedule);
}

ProbabilityStack corrupt(const ProbabilityStack& stack, const NoiseSpec& noise,
                         std::uint64_t seed) {
  if (noise.gaussian_sigma < 0 || noise.blur_radius < 0 || noise.dropout_rate < 0) {
    throw Error("corrupt: noise parameters must be >= 0");
  }
  ProbabilityStack out = stack;
  Rng rng(seed);
  for (ProbabilityMap& map : out.maps) {
    double* v = map.values.data();
    const Index n = map.grid.size();
    if (noise.gaussian_sigma > 0) {
      for (Index i = 0; i < n; ++i) {
        v[i] = std::clamp(v[i] + noise.gaussian_sigma * rng.normal(), 0.0, 1.0);
      }
    }
    if (noise.blur_radius > 0) {
      const int r = noise.blur_radius;
      const int h = map.grid.height, w = map.grid.width;
      // Separable box blur normalized by the in-bounds window size.
      Array2d tmp(h, w);
      for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
          const int lo = std::max(0, col - r), hi = std::min(w - 1, col + r);
          double s = 0.0;
          for (int c = lo; c <= hi; ++c) s += map.values(row, c);
          tmp(row, col) = s / (hi - lo + 1);
        }
      }
      for (int col = 0; col < w; ++col) {
        for (int row = 0; row < h; ++row) {
          const int lo = std::max(0, row - r), hi = std::min(h - 1, row + r);
          double s = 0.0;
          for (int rr = lo; rr <= hi; ++rr) s += tmp(rr, col);
          map.values(row, col) = s / (hi - lo + 1);
        }
      }
    }
    if (noise.dropout_rate > 0) {
      for (Index i = 0; i < n; ++i) {
        if (rng.uniform() < noise.dropout_rate) v[i] = 0.0;
      }
    }
  }
  return out;
}

ShapeFamily parse_shape_family(const std::string& name) {
  if (name == "rect") return ShapeFamily::rect;
  if (name == "curved") return ShapeFamily::curved;
  if (name == "mixed") return ShapeFamily::mixed;
  throw Error("unknown shape family: " + name);
}

std::string to_string(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::rect: return "rect";
    case ShapeFamily::curved: return "curved";
    default: return "mixed";
  }
}

double polygon_separation(const TextPolygon& a, const TextPolygon& b) {
  const auto& va = a.vertices;
  const auto& vb = b.vertices;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const Vec2& a1 = va[i];
    const Vec2& a2 = va[(i + 1) % va.size()];
    for (std::size_t j = 0; j < vb.size(); ++j) {
      best = std::min(best, segment_distance(a1, a2, vb[j], vb[(j + 1) % vb.size()]));
      if (best == 0.0) return 0.0;
    }
  }
  return best;
}

std::vector<TextPolygon> random_scene(const Grid& grid, int count,
                                      ShapeFamily family, double min_separation,
                                      std::uint64_t seed, double min_area) {
  if (count < 0) throw Error("random_scene: count must be >= 0");
  std::vector<TextPolygon> scene;
  if (count == 0) return scene;

  Rng rng(seed);
  const double margin = 2.0;
  constexpr int kMaxAttempts = 500;

  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      ShapeFamily pick = family;
      if (family == ShapeFamily::mixed) {
        pick = std::array{ShapeFamily::rect, ShapeFamily::rect,
                          ShapeFamily::curved}[rng.pick(3)];
      }
      std::vector<Vec2> vertices;
      switch (pick) {
        case ShapeFamily::rect:
          vertices = sample_rect(rng, grid, rng.uniform() < 0.5);
          break;
        default:
          vertices = sample_band(rng, grid);
          break;
      }

      bool in_bounds = true;
      for (const Vec2& v : vertices) {
        if (v.x() < margin || v.x() > grid.width - margin || v.y() < margin ||
            v.y() > grid.height - margin) {
          in_bounds = false;
          break;
        }
      }
      if (!in_bounds) continue;
      if (std::abs(signed_area(vertices)) < min_area) continue;
      if (!is_simple(vertices)) continue;

      TextPolygon candidate;
      try {
        candidate = make_polygon(std::move(vertices), "inst_" + std::to_string(i));
      } catch (const DegeneratePolygon&) {
        continue;
      }

      bool separated = true;
      for (const TextPolygon& other : scene) {
        if (polygon_separation(candidate, other) < min_separation ||
            polygon_contains_polygon(other, candidate) ||
            polygon_contains_polygon(candidate, other)) {
          separated = false;
          break;
        }
      }
      if (!separated) continue;

      scene.push_back(std::move(candidate));
      placed = true;
    }
    if (!placed) {
      throw PlacementFailure("random_scene: could not place instance " +
                             std::to_string(i) + " of " + std::to_string(count));
    }
  }
  return scene;
}

}  // namespace pmap
