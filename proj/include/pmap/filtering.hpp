#pragma once

#include <string>
#include <vector>

#include "pmap/core.hpp"
#include "pmap/probmap.hpp"

namespace pmap {

enum class FilterMode { threshold, voting };

FilterMode parse_filter_mode(const std::string& name);
std::string to_string(FilterMode mode);

struct FilterConfig {
  double th_b = 0.3;
  double th_e = 0.65;
  Index min_area = 300;  // beta_a, in output-resolution pixels
  FilterMode mode = FilterMode::threshold;
};

// Keeps a candidate iff its mean probability over the last predicted map is
// at least th_e and its area is at least min_area. Order preserved.
std::vector<InstanceMask> threshold_filter(const std::vector<InstanceMask>& masks,
                                           const ProbabilityMap& last_map,
                                           const FilterConfig& cfg);

// Weighted majority vote per candidate: each map P_j votes 1 when its mean
// over the mask is no more than th_b^2 below the mean of the mask's own
// reconstruction saf(D, L, alpha_j). Candidates below min_area are dropped
// up front; kept iff the weighted vote reaches 0.5.
std::vector<InstanceMask> voting_filter(const std::vector<InstanceMask>& masks,
                                        const ProbabilityStack& stack,
                                        const AlphaSchedule& schedule,
                                        const FilterConfig& cfg);

}  // namespace pmap
