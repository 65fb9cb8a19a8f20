#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pmap/core.hpp"
#include "pmap/geometry.hpp"

namespace pmap {

// Sigmoid alpha function: maps a boundary distance d, normalized by the
// instance scale L, to a probability in [0,1]. alpha shapes the curve from
// near-linear (alpha -> 0) to a step (alpha -> inf). Evaluated as
// tanh(alpha*u/2)/tanh(alpha/2) with u = d/L, which is algebraically identical
// to the sigmoid form but stable for extreme alpha and exact at u = 0 and 1.
template <class Scalar>
Scalar saf(Scalar d, Scalar L, Scalar alpha) {
  if (!(alpha > Scalar(0))) throw InvalidAlpha("saf: alpha must be > 0");
  const Scalar u = d / L;
  const Scalar value = std::tanh(alpha * u / Scalar(2)) / std::tanh(alpha / Scalar(2));
  return std::clamp(value, Scalar(0), Scalar(1));
}

// Linear normalization: d/L clamped to [0,1].
template <class Scalar>
Scalar lf(Scalar d, Scalar L) {
  return std::clamp(d / L, Scalar(0), Scalar(1));
}

// Binarization: 1 where d exceeds the threshold, strict inequality.
template <class Scalar>
Scalar bf(Scalar d, Scalar th) {
  return d > th ? Scalar(1) : Scalar(0);
}

// Ordered alpha values plus the voting weights used by the voting filter.
struct AlphaSchedule {
  std::vector<double> alphas;
  std::vector<double> weights;
  int step = 0;

  int count() const { return static_cast<int>(alphas.size()); }
};

// alphas = (1, k+1, 2k+1, ..., k*(n-1)+1). Default weights grow linearly with
// the map index (w_i = i / sum_j j), which reproduces (0.1, 0.2, 0.3, 0.4)
// for n = 4.
AlphaSchedule make_schedule(int k, int n);
AlphaSchedule make_schedule(int k, int n, std::vector<double> weights);

struct ProbabilityMap {
  Grid grid;
  double alpha = 0.0;
  Array2d values;
};

struct ProbabilityStack {
  std::vector<ProbabilityMap> maps;

  int count() const { return static_cast<int>(maps.size()); }
  bool empty() const { return maps.empty(); }
  Grid grid() const { return maps.empty() ? Grid{} : maps.front().grid; }
};

// Ground-truth stack: G_i(p) = max over instances containing p of
// saf(D(p), L, alpha_i); zero outside all instances. "ignore" instances still
// generate probability (they only matter to evaluation).
ProbabilityStack generate_label_stack(std::span<const TextPolygon> polys,
                                      const Grid& grid,
                                      const AlphaSchedule& schedule);

struct LossConfig {
  std::vector<double> lambdas;  // empty = all ones
  double gamma = 3.0;
  bool ohem = true;
};

// Hard-negative mining pixel set: all positives (gt > 0) plus the
// round(gamma * #positives) negatives with the largest squared error, ties
// broken by row-major index. With no positives, every negative is kept.
std::vector<Index> ohem_select(const ProbabilityMap& pred,
                               const ProbabilityMap& gt, double gamma);

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> per_map;
};

// Per-map MSE over the OHEM-selected pixel set, combined as a lambda-weighted
// sum. Each per-map term averages over its own selected set.
LossBreakdown stack_loss(const ProbabilityStack& pred, const ProbabilityStack& gt,
                         const LossConfig& cfg);

}  // namespace pmap
