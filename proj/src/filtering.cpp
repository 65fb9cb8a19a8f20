#include "pmap/filtering.hpp"

#include <iostream>

#include "pmap/geometry.hpp"

namespace pmap {

namespace {

double mean_over_mask(const ProbabilityMap& map, const InstanceMask& mask) {
  const double* values = map.values.data();
  double sum = 0.0;
  for (Index p : mask.pixels) sum += values[p];
  return sum / static_cast<double>(mask.pixels.size());
}

}  // namespace

FilterMode parse_filter_mode(const std::string& name) {
  if (name == "threshold") return FilterMode::threshold;
  if (name == "voting") return FilterMode::voting;
  throw Error("unknown filter mode: " + name);
}

std::string to_string(FilterMode mode) {
  return mode == FilterMode::threshold ? "threshold" : "voting";
}

std::vector<InstanceMask> threshold_filter(const std::vector<InstanceMask>& masks,
                                           const ProbabilityMap& last_map,
                                           const FilterConfig& cfg) {
  std::vector<InstanceMask> kept;
  for (const InstanceMask& mask : masks) {
    if (mask.grid != last_map.grid) throw ShapeMismatch("threshold_filter: grid mismatch");
    if (mask.area() < cfg.min_area) continue;
    if (mean_over_mask(last_map, mask) >= cfg.th_e) kept.push_back(mask);
  }
  return kept;
}

std::vector<InstanceMask> voting_filter(const std::vector<InstanceMask>& masks,
                                        const ProbabilityStack& stack,
                                        const AlphaSchedule& schedule,
                                        const FilterConfig& cfg) {
  if (stack.count() != schedule.count()) {
    throw ShapeMismatch("voting_filter: stack and schedule disagree on map count");
  }
  const double offset = cfg.th_b * cfg.th_b;

  std::vector<InstanceMask> kept;
  for (const InstanceMask& mask : masks) {
    if (mask.grid != stack.grid()) throw ShapeMismatch("voting_filter: grid mismatch");
    if (mask.area() < cfg.min_area) continue;

    DistanceFragment dist;
    try {
      dist = mask_distance_map(mask);
    } catch (const EmptyInstance&) {
      std::cerr << "voting_filter: skipping empty candidate " << mask.label << "\n";
      continue;
    }
    double scale = 1.0;
    for (double d : dist.distance) scale = std::max(scale, d);

    double vote = 0.0;
    for (int j = 0; j < stack.count(); ++j) {
      const double expected_old = mean_over_mask(stack.maps[j], mask);
      double expected_new = 0.0;
      for (double d : dist.distance) {
        expected_new += saf(d, scale, schedule.alphas[j]);
      }
      expected_new /= static_cast<double>(dist.size());
      if (expected_old >= expected_new - offset) vote += schedule.weights[j];
    }
    if (vote >= 0.5) kept.push_back(mask);
  }
  return kept;
}

}  // namespace pmap
