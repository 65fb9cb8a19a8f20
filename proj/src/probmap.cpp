#include "pmap/probmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmap {

namespace {

void validate_schedule(const AlphaSchedule& schedule) {
  if (schedule.count() < 2) throw InvalidSchedule("schedule needs at least 2 maps");
  for (int i = 0; i < schedule.count(); ++i) {
    if (schedule.alphas[i] <= 0) throw InvalidSchedule("alphas must be positive");
    if (i > 0 && schedule.alphas[i] <= schedule.alphas[i - 1]) {
      throw InvalidSchedule("alphas must be strictly increasing");
    }
  }
  if (schedule.weights.size() != schedule.alphas.size()) {
    throw InvalidSchedule("weights count must match alpha count");
  }
  double sum = 0.0;
  for (double w : schedule.weights) {
    if (w < 0) throw InvalidSchedule("weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidSchedule("weights must sum to 1");
}

}  // namespace

AlphaSchedule make_schedule(int k, int n) {
  if (k < 2 || n < 2) throw InvalidSchedule("make_schedule requires k >= 2 and n >= 2");
  std::vector<double> weights(n);
  const double denom = 0.5 * n * (n + 1);
  for (int i = 1; i <= n; ++i) weights[i - 1] = i / denom;
  return make_schedule(k, n, std::move(weights));
}

AlphaSchedule make_schedule(int k, int n, std::vector<double> weights) {
  if (k < 2 || n < 2) throw InvalidSchedule("make_schedule requires k >= 2 and n >= 2");
  AlphaSchedule schedule;
  schedule.step = k;
  schedule.alphas.resize(n);
  for (int i = 1; i <= n; ++i) {
    schedule.alphas[i - 1] = static_cast<double>(k) * (i - 1) + 1.0;
  }
  schedule.weights = std::move(weights);
  validate_schedule(schedule);
  return schedule;
}

ProbabilityStack generate_label_stack(std::span<const TextPolygon> polys,
                                      const Grid& grid,
                                      const AlphaSchedule& schedule) {
  validate_schedule(schedule);
  ProbabilityStack stack;
  stack.maps.reserve(schedule.count());
  for (double alpha : schedule.alphas) {
    stack.maps.push_back({grid, alpha, Array2d::Zero(grid.height, grid.width)});
  }

  for (const TextPolygon& poly : polys) {
    const auto pixels = rasterize_interior(poly, grid);
    if (pixels.empty()) continue;  // instance entirely off-grid
    const DistanceFragment frag = distance_to_boundary(poly, grid, pixels);
    const double L = instance_scale(frag);
    for (ProbabilityMap& map : stack.maps) {
      double* values = map.values.data();
      for (std::size_t k = 0; k < frag.size(); ++k) {
        // Overlapping instances keep the larger probability.
        const double v = saf(frag.distance[k], L, map.alpha);
        double& cell = values[frag.pixels[k]];
        cell = std::max(cell, v);
      }
    }
  }
  return stack;
}

std::vector<Index> ohem_select(const ProbabilityMap& pred,
                               const ProbabilityMap& gt, double gamma) {
  if (pred.grid != gt.grid) throw ShapeMismatch("ohem_select: grid mismatch");
  if (!(gamma > 0)) throw Error("ohem_select: gamma must be > 0");

  const Index n = gt.grid.size();
  const double* g = gt.values.data();
  const double* p = pred.values.data();

  std::vector<Index> positives;
  std::vector<Index> negatives;
  for (Index i = 0; i < n; ++i) {
    (g[i] > 0.0 ? positives : negatives).push_back(i);
  }

  if (positives.empty()) {
    return negatives;  // nothing to mine against; keep every negative
  }

  const std::size_t want = static_cast<std::size_t>(
      std::llround(gamma * static_cast<double>(positives.size())));
  const std::size_t keep = std::min(want, negatives.size());

  auto sq_err = [&](Index i) {
    const double d = g[i] - p[i];
    return d * d;
  };
  std::partial_sort(negatives.begin(), negatives.begin() + keep, negatives.end(),
                    [&](Index a, Index b) {
                      const double ea = sq_err(a), eb = sq_err(b);
                      if (ea != eb) return ea > eb;
                      return a < b;
                    });
  negatives.resize(keep);

  std::vector<Index> selected;
  selected.reserve(positives.size() + negatives.size());
  selected.insert(selected.end(), positives.begin(), positives.end());
  selected.insert(selected.end(), negatives.begin(), negatives.end());
  std::sort(selected.begin(), selected.end());
  return selected;
}

LossBreakdown stack_loss(const ProbabilityStack& pred, const ProbabilityStack& gt,
                         const LossConfig& cfg) {
  if (pred.count() != gt.count()) throw ShapeMismatch("stack_loss: map count mismatch");
  if (pred.count() == 0) return {};
  if (pred.grid() != gt.grid()) throw ShapeMismatch("stack_loss: grid mismatch");
  if (!cfg.lambdas.empty() &&
      cfg.lambdas.size() != static_cast<std::size_t>(pred.count())) {
    throw ShapeMismatch("stack_loss: lambda count mismatch");
  }

  LossBreakdown result;
  result.per_map.resize(pred.count());
  for (int i = 0; i < pred.count(); ++i) {
    const double* p = pred.maps[i].values.data();
    const double* g = gt.maps[i].values.data();
    double sum = 0.0;
    std::size_t count = 0;
    if (cfg.ohem) {
      const auto selected = ohem_select(pred.maps[i], gt.maps[i], cfg.gamma);
      for (Index idx : selected) {
        const double d = g[idx] - p[idx];
        sum += d * d;
      }
      count = selected.size();
    } else {
      const Index n = pred.grid().size();
      for (Index idx = 0; idx < n; ++idx) {
        const double d = g[idx] - p[idx];
        sum += d * d;
      }
      count = static_cast<std::size_t>(n);
    }
    result.per_map[i] = count > 0 ? sum / static_cast<double>(count) : 0.0;
    const double lambda = cfg.lambdas.empty() ? 1.0 : cfg.lambdas[i];
    result.total += lambda * result.per_map[i];
  }
  return result;
}

}  // namespace pmap
