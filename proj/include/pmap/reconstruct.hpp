#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmap/core.hpp"
#include "pmap/probmap.hpp"

namespace pmap {

// Per-map binary layers, ordered like the stack: layer 0 comes from the
// smallest alpha and is the most shrunken after fixed-threshold binarization.
struct BinarizedStack {
  Grid grid;
  std::vector<Array2u8> layers;

  int count() const { return static_cast<int>(layers.size()); }
};

// Thresholds every map at value >= th_b.
BinarizedStack binarize_stack(const ProbabilityStack& stack, double th_b);

// 4-connected labeling; components are ordered (and labeled from 1) by their
// smallest row-major pixel index.
std::vector<InstanceMask> connected_components(const Array2u8& layer);

// Region growth from the layer-0 components outward through successive
// layers: one shared FIFO queue seeded in label order, 4-neighborhood,
// first arrival claims a pixel.
std::vector<InstanceMask> progressive_scale_expansion(const BinarizedStack& bstack);

// The expansion phase alone, starting from the given seed instances. Exposed
// so the benchmark can time it separately from seed labeling.
std::vector<InstanceMask> expand_from_seeds(const BinarizedStack& bstack,
                                            std::vector<InstanceMask> seeds);

// Marker-based watershed: markers are the layer-0 components, topography is
// 1 - mean(stack), flooding is restricted to the last layer's support.
// Priority is ascending topography, ties by row-major index, then insertion
// order, so ridge pixels go to whichever marker reaches them first.
std::vector<InstanceMask> watershed_aggregate(const ProbabilityStack& stack,
                                              const BinarizedStack& bstack);

// The flooding phase alone, starting from the given markers.
std::vector<InstanceMask> flood_from_markers(const ProbabilityStack& stack,
                                             const BinarizedStack& bstack,
                                             std::vector<InstanceMask> markers);

enum class GrowthAlgorithm { pse, watershed };

GrowthAlgorithm parse_growth_algorithm(const std::string& name);
std::string to_string(GrowthAlgorithm algorithm);

// binarize + grow in one step.
std::vector<InstanceMask> grow_instances(const ProbabilityStack& stack,
                                         double th_b, GrowthAlgorithm algorithm);

struct StageTiming {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

struct BenchReport {
  Grid grid;
  int n_maps = 0;
  GrowthAlgorithm algorithm = GrowthAlgorithm::pse;
  int runs = 0;
  int instances = 0;
  StageTiming binarize;
  StageTiming components;
  StageTiming growth;

  double total_mean_ms() const {
    return binarize.mean_ms + components.mean_ms + growth.mean_ms;
  }
};

// Times the post-processing stages on a synthetic stack, single-threaded.
BenchReport bench_region_growth(const Grid& grid, int n_maps,
                                GrowthAlgorithm algorithm, int runs = 20,
                                std::uint64_t seed = 1, double th_b = 0.3);

}  // namespace pmap
