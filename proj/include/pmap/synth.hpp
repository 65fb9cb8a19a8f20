#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmap/core.hpp"
#include "pmap/geometry.hpp"
#include "pmap/probmap.hpp"

namespace pmap {

// Noiseless predictor stand-in: the ground-truth label stack itself.
ProbabilityStack oracle_stack(std::span<const TextPolygon> polys, const Grid& grid,
                              const AlphaSchedule& schedule);

struct NoiseSpec {
  double gaussian_sigma = 0.0;
  int blur_radius = 0;
  double dropout_rate = 0.0;
};

// Deterministic corruption: per-pixel Gaussian noise (clamped to [0,1]),
// then a box blur, then per-pixel dropout to zero. Same seed, same output.
ProbabilityStack corrupt(const ProbabilityStack& stack, const NoiseSpec& noise,
                         std::uint64_t seed);

enum class ShapeFamily { rect, curved, mixed };

ShapeFamily parse_shape_family(const std::string& name);
std::string to_string(ShapeFamily family);

// Non-overlapping text-like polygons (axis-aligned rectangles, rotated
// rectangles, and sinusoidal curved bands with 14-point boundaries) whose
// pairwise boundary separation is at least `min_separation`. Deterministic
// per seed; throws PlacementFailure when an instance cannot be placed within
// the retry budget.
std::vector<TextPolygon> random_scene(const Grid& grid, int count,
                                      ShapeFamily family, double min_separation,
                                      std::uint64_t seed, double min_area = 400.0);

// Shortest distance between two polygon boundaries (0 when they intersect).
double polygon_separation(const TextPolygon& a, const TextPolygon& b);

}  // namespace pmap
