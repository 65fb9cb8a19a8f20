#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmap/contours.hpp"
#include "pmap/core.hpp"
#include "pmap/evaluation.hpp"
#include "pmap/filtering.hpp"
#include "pmap/probmap.hpp"
#include "pmap/reconstruct.hpp"

namespace pmap {

// Prediction tensor file: 16-byte little-endian header
// (magic "PMAP", version u16, n_maps u16, height u32, width u32) followed by
// n_maps * height * width float32 values, map-major, row-major within a map.
inline constexpr std::uint16_t kTensorVersion = 1;

ProbabilityStack read_stack(const std::filesystem::path& path);
void write_stack(const ProbabilityStack& stack, const std::filesystem::path& path);

// Tags the maps of a freshly read stack with the schedule's alphas.
void attach_alphas(ProbabilityStack& stack, const AlphaSchedule& schedule);

enum class Colormap { gray, viridis, jet };
Colormap parse_colormap(const std::string& name);

// Writes a PGM (gray) or PPM (color) raster; byte-deterministic.
void export_heatmap(const ProbabilityMap& map, const std::filesystem::path& path,
                    Colormap colormap = Colormap::gray);
// One file per map: <stem>_m<i><ext>.
void export_heatmap(const ProbabilityStack& stack,
                    const std::filesystem::path& path,
                    Colormap colormap = Colormap::gray);

ImageAnnotations read_annotations(const std::filesystem::path& path);
void write_annotations(const ImageAnnotations& annotations,
                       const std::filesystem::path& path);
ImageDetections read_detections(const std::filesystem::path& path);
void write_detections(const ImageDetections& detections,
                      const std::filesystem::path& path);
std::string detections_to_json(const ImageDetections& detections);

// Reads one annotations/detections JSON file or every *.json in a directory.
std::vector<ImageAnnotations> read_annotation_set(const std::filesystem::path& path);
std::vector<ImageDetections> read_detection_set(const std::filesystem::path& path);

// Everything the CLI pipelines need in one place; defaults follow the
// reference setup (th_b 0.3, th_e 0.65, min area 300, schedule k=3 n=4).
struct PipelineConfig {
  int k = 3;
  int n = 4;
  std::vector<double> weights;  // empty = schedule default (0.1 .. 0.4 for n=4)
  std::vector<double> lambdas;  // empty = all ones
  double gamma = 3.0;
  double th_b = 0.3;
  double th_e = 0.65;
  Index min_area = 300;
  GrowthAlgorithm grow = GrowthAlgorithm::pse;
  FilterMode filter = FilterMode::threshold;
  BoundaryMode boundary = BoundaryMode::polygon;
  double simplify_eps = 1.0;
  double iou_threshold = 0.5;

  AlphaSchedule schedule() const;
  FilterConfig filter_config() const;
};

// Dataset presets; `filter` must be set before applying since threshold and
// voting runs use different binarization thresholds.
std::vector<std::string> preset_names();
void apply_preset(PipelineConfig& cfg, const std::string& name);

// JSON config file: any subset of the PipelineConfig keys.
void load_config(PipelineConfig& cfg, const std::filesystem::path& path);

// Runs fn(0..count-1) on a bounded worker pool; `threads` <= 0 falls back to
// PMAP_THREADS, then hardware concurrency. Results must be written to
// index-addressed slots so the merge order never depends on scheduling.
void run_parallel(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

int resolve_thread_count(int requested);

}  // namespace pmap
