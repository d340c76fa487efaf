#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dtsurv {

// Survival of each enrollment at one horizon under both regimes, with its
// binary group label.
struct SubgroupSample {
  std::vector<std::uint8_t> group;
  std::vector<double> s_baseline;
  std::vector<double> s_policy;
};

// Mean survival of group 0 and group 1. Throws kArgument naming the empty level.
std::pair<double, double> group_means(std::span<const double> survival,
                                      std::span<const std::uint8_t> group);

struct GapResult {
  std::string group_column;
  std::string orientation;  // e.g. "F minus M"
  int T = 0;
  double mean0_baseline = 0.0;
  double mean1_baseline = 0.0;
  double mean0_policy = 0.0;
  double mean1_policy = 0.0;
  double gap_baseline = 0.0;  // mu1 - mu0 under baseline
  double gap_policy = 0.0;
  double delta_gap = 0.0;     // gap_policy - gap_baseline
  double ci_low = 0.0;
  double ci_high = 0.0;
  int B = 0;
  std::uint64_t seed = 0;
  bool stratified = false;
  std::size_t redraws = 0;
  std::vector<double> replicates;  // in replicate order
};

GapResult delta_gap(const SubgroupSample& sample, int T);

struct BootstrapOptions {
  int B = 500;
  std::uint64_t seed = 42;
  bool stratified = false;  // resample within each group
};

// Percentile 95% CI over B enrollment-level resamples. Replicate b draws from
// its own stream derive_seed(seed, "bootstrap", b), so results do not depend
// on thread count. A replicate with an empty group is redrawn from the same
// stream; more than 10*B redraws in total is an error.
GapResult bootstrap_ci(const SubgroupSample& sample, int T,
                       const BootstrapOptions& options);

// Linear-interpolation percentile of a sample (copied and sorted).
double percentile(std::vector<double> values, double p);

// Maps group levels to {0,1}; levels absent from the mapping are dropped
// (index lists the kept positions).
struct GroupMapping {
  std::vector<std::uint8_t> group;
  std::vector<std::size_t> kept;
  std::size_t dropped = 0;
};

GroupMapping map_groups(std::span<const std::string> levels,
                        const std::map<std::string, int>& mapping);

}  // namespace dtsurv
