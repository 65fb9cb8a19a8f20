#pragma once

#include <string>
#include <vector>

#include "pmap/contours.hpp"
#include "pmap/core.hpp"
#include "pmap/geometry.hpp"

namespace pmap {

// Exact intersection area of two simple polygons, computed by clipping the
// signed fan triangulations against each other (convex-convex clips only).
double polygon_intersection_area(const TextPolygon& a, const TextPolygon& b);

double polygon_area(const TextPolygon& poly);

// area(a n b) / area(a u b) in [0,1].
double polygon_iou(const TextPolygon& a, const TextPolygon& b);

struct ImageAnnotations {
  std::string image;
  Grid grid;
  std::vector<TextPolygon> instances;
};

struct ImageDetections {
  std::string image;
  Grid grid;
  std::vector<DetectionBoundary> detections;
};

struct ImageCounts {
  std::string image;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct MatchReport {
  std::vector<ImageCounts> per_image;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  double iou_threshold = 0.5;

  int total_tp() const;
  int total_fp() const;
  int total_fn() const;
};

// Greedy one-to-one matching per image: detections in descending score order
// (ties by input index) claim the best unmatched ground truth with IoU at or
// above the threshold. Detections whose best remaining overlap is an "ignore"
// instance are excluded from the fp count; unmatched non-ignore ground truths
// are fn. Precision/recall/F are micro-averaged over the summed counts; an
// empty denominator yields 0 by convention.
MatchReport match_and_score(const std::vector<ImageDetections>& detections,
                            const std::vector<ImageAnnotations>& ground_truth,
                            double iou_threshold = 0.5);

}  // namespace pmap
