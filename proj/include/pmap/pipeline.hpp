#pragma once

#include <string>
#include <vector>

#include "pmap/evaluation.hpp"
#include "pmap/io.hpp"
#include "pmap/synth.hpp"

namespace pmap {

// Predicted stack -> grown instances -> filtered instances -> boundaries.
ImageDetections detect_instances(const ProbabilityStack& pred,
                                 const AlphaSchedule& schedule,
                                 const PipelineConfig& cfg,
                                 const std::string& image_id);

struct SyntheticSceneSpec {
  Grid grid{256, 256};
  int scenes = 1;
  int instances_per_scene = 3;
  ShapeFamily shapes = ShapeFamily::mixed;
  double min_separation = 4.0;
  double min_area = 400.0;
  NoiseSpec noise;
  std::uint64_t seed = 1;
};

struct SyntheticScene {
  ImageAnnotations annotations;
  ProbabilityStack prediction;  // oracle stack after corruption
};

// Scene i uses seed base_seed + i for both placement and corruption.
SyntheticScene make_synthetic_scene(const SyntheticSceneSpec& spec,
                                    const AlphaSchedule& schedule,
                                    std::size_t index);

struct PipelineOutcome {
  MatchReport report;
  std::vector<ImageDetections> detections;
};

// Synthetic end-to-end run over `spec.scenes` scenes with a bounded worker
// pool; per-scene results land in index-addressed slots so output is
// independent of the thread count.
PipelineOutcome run_synthetic_pipeline(const SyntheticSceneSpec& spec,
                                       const PipelineConfig& cfg,
                                       int threads = 0);

}  // namespace pmap
