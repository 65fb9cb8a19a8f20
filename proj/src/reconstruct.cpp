#include "pmap/reconstruct.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <utility>

#include "pmap/synth.hpp"

namespace pmap {

BinarizedStack binarize_stack(const ProbabilityStack& stack, double th_b) {
  if (!(th_b > 0.0 && th_b < 1.0)) throw Error("binarize_stack: th_b must be in (0,1)");
  BinarizedStack out;
  out.grid = stack.grid();
  out.layers.reserve(stack.count());
  for (const ProbabilityMap& map : stack.maps) {
    out.layers.push_back((map.values >= th_b).cast<std::uint8_t>());
  }
  return out;
}

std::vector<InstanceMask> connected_components(const Array2u8& layer) {
  const Grid grid{static_cast<int>(layer.cols()), static_cast<int>(layer.rows())};
  const std::uint8_t* data = layer.data();
  const Index n = grid.size();

  std::vector<std::int32_t> labels(static_cast<std::size_t>(n), 0);
  std::vector<Index> queue;
  std::int32_t next_label = 0;

  static constexpr int kDc[4] = {-1, 1, 0, 0};
  static constexpr int kDr[4] = {0, 0, -1, 1};

  std::vector<InstanceMask> masks;
  for (Index start = 0; start < n; ++start) {
    if (!data[start] || labels[start]) continue;
    ++next_label;
    queue.clear();
    queue.push_back(start);
    labels[start] = next_label;
    std::size_t head = 0;
    while (head < queue.size()) {
      const Index p = queue[head++];
      const int col = grid.col_of(p), row = grid.row_of(p);
      for (int k = 0; k < 4; ++k) {
        const int nc = col + kDc[k], nr = row + kDr[k];
        if (!grid.contains(nc, nr)) continue;
        const Index q = grid.index_of(nc, nr);
        if (data[q] && !labels[q]) {
          labels[q] = next_label;
          queue.push_back(q);
        }
      }
    }
    masks.push_back({grid, next_label, {}});
  }

  // Row-major collection pass keeps every pixel list sorted.
  for (Index p = 0; p < n; ++p) {
    if (labels[p]) masks[labels[p] - 1].pixels.push_back(p);
  }
  return masks;
}

std::vector<InstanceMask> expand_from_seeds(const BinarizedStack& bstack,
                                            std::vector<InstanceMask> seeds) {
  if (seeds.empty()) return {};
  const Grid grid = bstack.grid;
  const Index n = grid.size();

  std::vector<std::int32_t> labels(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<Index>> instance_pixels(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    instance_pixels[s] = seeds[s].pixels;
    for (Index p : seeds[s].pixels) labels[p] = static_cast<std::int32_t>(s) + 1;
  }

  static constexpr int kDc[4] = {-1, 1, 0, 0};
  static constexpr int kDr[4] = {0, 0, -1, 1};

  std::vector<std::pair<Index, std::int32_t>> queue;
  for (int stage = 1; stage < bstack.count(); ++stage) {
    const std::uint8_t* layer = bstack.layers[stage].data();
    queue.clear();
    // Shared FIFO seeded in label order, row-major within each instance:
    // first arrival claims contested pixels.
    for (std::size_t s = 0; s < instance_pixels.size(); ++s) {
      std::sort(instance_pixels[s].begin(), instance_pixels[s].end());
      for (Index p : instance_pixels[s]) {
        queue.emplace_back(p, static_cast<std::int32_t>(s) + 1);
      }
    }
    std::size_t head = 0;
    while (head < queue.size()) {
      const auto [p, label] = queue[head++];
      const int col = grid.col_of(p), row = grid.row_of(p);
      for (int k = 0; k < 4; ++k) {
        const int nc = col + kDc[k], nr = row + kDr[k];
        if (!grid.contains(nc, nr)) continue;
        const Index q = grid.index_of(nc, nr);
        if (layer[q] && !labels[q]) {
          labels[q] = label;
          instance_pixels[label - 1].push_back(q);
          queue.emplace_back(q, label);
        }
      }
    }
  }

  std::vector<InstanceMask> out;
  out.reserve(seeds.size());
  for (std::size_t s = 0; s < instance_pixels.size(); ++s) {
    std::sort(instance_pixels[s].begin(), instance_pixels[s].end());
    out.push_back({grid, static_cast<int>(s) + 1, std::move(instance_pixels[s])});
  }
  return out;
}

std::vector<InstanceMask> progressive_scale_expansion(const BinarizedStack& bstack) {
  if (bstack.count() == 0) return {};
  return expand_from_seeds(bstack, connected_components(bstack.layers.front()));
}

namespace {

struct FloodEntry {
  double topo;
  Index pixel;
  std::uint64_t age;
  std::int32_t label;
};

struct FloodOrder {
  bool operator()(const FloodEntry& a, const FloodEntry& b) const {
    if (a.topo != b.topo) return a.topo > b.topo;
    if (a.pixel != b.pixel) return a.pixel > b.pixel;
    return a.age > b.age;
  }
};

}  // namespace

std::vector<InstanceMask> flood_from_markers(const ProbabilityStack& stack,
                                             const BinarizedStack& bstack,
                                             std::vector<InstanceMask> markers) {
  if (markers.empty()) return {};
  if (stack.grid() != bstack.grid) throw ShapeMismatch("watershed: grid mismatch");
  const Grid grid = bstack.grid;
  const Index n = grid.size();

  Array2d topo = Array2d::Zero(grid.height, grid.width);
  for (const ProbabilityMap& map : stack.maps) topo += map.values;
  topo = 1.0 - topo / static_cast<double>(stack.count());

  const std::uint8_t* support = bstack.layers.back().data();
  const double* topo_data = topo.data();

  std::vector<std::int32_t> labels(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<Index>> instance_pixels(markers.size());
  for (std::size_t s = 0; s < markers.size(); ++s) {
    instance_pixels[s] = markers[s].pixels;
    for (Index p : markers[s].pixels) labels[p] = static_cast<std::int32_t>(s) + 1;
  }

  static constexpr int kDc[4] = {-1, 1, 0, 0};
  static constexpr int kDr[4] = {0, 0, -1, 1};

  std::priority_queue<FloodEntry, std::vector<FloodEntry>, FloodOrder> heap;
  std::uint64_t age = 0;
  auto push_neighbors = [&](Index p, std::int32_t label) {
    const int col = grid.col_of(p), row = grid.row_of(p);
    for (int k = 0; k < 4; ++k) {
      const int nc = col + kDc[k], nr = row + kDr[k];
      if (!grid.contains(nc, nr)) continue;
      const Index q = grid.index_of(nc, nr);
      if (support[q] && !labels[q]) {
        heap.push({topo_data[q], q, age++, label});
      }
    }
  };

  for (std::size_t s = 0; s < markers.size(); ++s) {
    for (Index p : instance_pixels[s]) {
      push_neighbors(p, static_cast<std::int32_t>(s) + 1);
    }
  }

  while (!heap.empty()) {
    const FloodEntry e = heap.top();
    heap.pop();
    if (labels[e.pixel]) continue;
    labels[e.pixel] = e.label;
    instance_pixels[e.label - 1].push_back(e.pixel);
    push_neighbors(e.pixel, e.label);
  }

  std::vector<InstanceMask> out;
  out.reserve(markers.size());
  for (std::size_t s = 0; s < instance_pixels.size(); ++s) {
    std::sort(instance_pixels[s].begin(), instance_pixels[s].end());
    out.push_back({grid, static_cast<int>(s) + 1, std::move(instance_pixels[s])});
  }
  return out;
}

std::vector<InstanceMask> watershed_aggregate(const ProbabilityStack& stack,
                                              const BinarizedStack& bstack) {
  if (bstack.count() == 0) return {};
  return flood_from_markers(stack, bstack,
                            connected_components(bstack.layers.front()));
}

GrowthAlgorithm parse_growth_algorithm(const std::string& name) {
  if (name == "pse") return GrowthAlgorithm::pse;
  if (name == "watershed") return GrowthAlgorithm::watershed;
  throw Error("unknown region growth algorithm: " + name);
}

std::string to_string(GrowthAlgorithm algorithm) {
  return algorithm == GrowthAlgorithm::pse ? "pse" : "watershed";
}

std::vector<InstanceMask> grow_instances(const ProbabilityStack& stack,
                                         double th_b, GrowthAlgorithm algorithm) {
  const BinarizedStack bstack = binarize_stack(stack, th_b);
  return algorithm == GrowthAlgorithm::pse ? progressive_scale_expansion(bstack)
                                           : watershed_aggregate(stack, bstack);
}

namespace {

StageTiming summarize(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  StageTiming t;
  for (double s : samples) t.mean_ms += s;
  t.mean_ms /= static_cast<double>(samples.size());
  const std::size_t at = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(samples.size()))) - 1;
  t.p95_ms = samples[std::min(at, samples.size() - 1)];
  return t;
}

}  // namespace

BenchReport bench_region_growth(const Grid& grid, int n_maps,
                                GrowthAlgorithm algorithm, int runs,
                                std::uint64_t seed, double th_b) {
  if (runs < 1) throw Error("bench_region_growth: runs must be >= 1");
  if (n_maps < 2) throw Error("bench_region_growth: n_maps must be >= 2");

  const int count = static_cast<int>(
      std::clamp<Index>(grid.size() / 120000, 2, 8));
  const auto polys = random_scene(grid, count, ShapeFamily::mixed, 8.0, seed);
  const auto stack = oracle_stack(polys, grid, make_schedule(3, n_maps));

  using Clock = std::chrono::steady_clock;
  auto ms_since = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  std::vector<double> t_bin, t_cc, t_grow;
  std::size_t instances = 0;
  for (int r = 0; r < runs; ++r) {
    auto t0 = Clock::now();
    const BinarizedStack bstack = binarize_stack(stack, th_b);
    t_bin.push_back(ms_since(t0));

    t0 = Clock::now();
    auto seeds = connected_components(bstack.layers.front());
    t_cc.push_back(ms_since(t0));

    t0 = Clock::now();
    const auto masks =
        algorithm == GrowthAlgorithm::pse
            ? expand_from_seeds(bstack, std::move(seeds))
            : flood_from_markers(stack, bstack, std::move(seeds));
    t_grow.push_back(ms_since(t0));
    instances = masks.size();
  }

  BenchReport report;
  report.grid = grid;
  report.n_maps = n_maps;
  report.algorithm = algorithm;
  report.runs = runs;
  report.instances = static_cast<int>(instances);
  report.binarize = summarize(std::move(t_bin));
  report.components = summarize(std::move(t_cc));
  report.growth = summarize(std::move(t_grow));
  return report;
}

}  // namespace pmap
