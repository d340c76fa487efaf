#include "dtsurv/subgroup.hpp"

#include <algorithm>
#include <cmath>

#include "dtsurv/error.hpp"
#include "dtsurv/rng.hpp"

namespace dtsurv {

namespace {

struct Means {
  double m0 = 0, m1 = 0;
  std::size_t n0 = 0, n1 = 0;
};

template <typename Index>
Means means_over(std::span<const double> s, std::span<const std::uint8_t> g, Index&& index,
                 std::size_t n) {
  Means m;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = index(k);
    if (g[i]) {
      m.m1 += s[i];
      ++m.n1;
    } else {
      m.m0 += s[i];
      ++m.n0;
    }
  }
  if (m.n0) m.m0 /= double(m.n0);
  if (m.n1) m.m1 /= double(m.n1);
  return m;
}

void check_sample(const SubgroupSample& s) {
  if (s.s_baseline.size() != s.group.size() || s.s_policy.size() != s.group.size()) {
    throw Error(ErrorCode::kContract, "subgroup sample vectors differ in length");
  }
}

}  // namespace

std::pair<double, double> group_means(std::span<const double> survival,
                                      std::span<const std::uint8_t> group) {
  if (survival.size() != group.size()) {
    throw Error(ErrorCode::kContract, "group labels do not match the curves");
  }
  const Means m = means_over(survival, group, [](std::size_t k) { return k; }, group.size());
  if (m.n0 == 0) throw Error(ErrorCode::kArgument, "group level 0 is empty");
  if (m.n1 == 0) throw Error(ErrorCode::kArgument, "group level 1 is empty");
  return {m.m0, m.m1};
}

GapResult delta_gap(const SubgroupSample& sample, int T) {
  check_sample(sample);
  GapResult r;
  r.T = T;
  std::tie(r.mean0_baseline, r.mean1_baseline) = group_means(sample.s_baseline, sample.group);
  std::tie(r.mean0_policy, r.mean1_policy) = group_means(sample.s_policy, sample.group);
  r.gap_baseline = r.mean1_baseline - r.mean0_baseline;
  r.gap_policy = r.mean1_policy - r.mean0_policy;
  r.delta_gap = r.gap_policy - r.gap_baseline;
  return r;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * double(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - double(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

GapResult bootstrap_ci(const SubgroupSample& sample, int T, const BootstrapOptions& options) {
  if (options.B < 1) throw Error(ErrorCode::kArgument, "bootstrap B must be >= 1");
  GapResult r = delta_gap(sample, T);
  r.B = options.B;
  r.seed = options.seed;
  r.stratified = options.stratified;

  const std::size_t n = sample.group.size();
  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < n; ++i) members[sample.group[i] ? 1 : 0].push_back(i);

  const auto B = static_cast<std::size_t>(options.B);
  const std::size_t max_redraws = 10 * B;
  r.replicates.assign(B, 0.0);
  std::vector<std::size_t> redraws(B, 0);
  std::vector<std::uint8_t> exhausted(B, 0);

  const auto nb = static_cast<std::int64_t>(B);
#pragma omp parallel for schedule(static)
  for (std::int64_t bi = 0; bi < nb; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    Rng rng(derive_seed(options.seed, "bootstrap", b));
    std::vector<std::size_t> draw(n);
    for (;;) {
      if (options.stratified) {
        std::size_t k = 0;
        for (const auto& m : members) {
          for (std::size_t j = 0; j < m.size(); ++j) draw[k++] = m[rng.uniform_index(m.size())];
        }
      } else {
        for (auto& d : draw) d = static_cast<std::size_t>(rng.uniform_index(n));
      }
      auto at = [&](std::size_t k) { return draw[k]; };
      const Means m0 = means_over(sample.s_baseline, sample.group, at, n);
      if (m0.n0 == 0 || m0.n1 == 0) {
        if (++redraws[b] > max_redraws) {
          exhausted[b] = 1;
          break;
        }
        continue;
      }
      const Means m1 = means_over(sample.s_policy, sample.group, at, n);
      r.replicates[b] = (m1.m1 - m1.m0) - (m0.m1 - m0.m0);
      break;
    }
  }
  for (std::size_t b = 0; b < B; ++b) r.redraws += redraws[b];
  if (r.redraws > max_redraws || std::find(exhausted.begin(), exhausted.end(), 1) != exhausted.end()) {
    throw Error(ErrorCode::kDegenerateSupport,
                "bootstrap: more than 10*B redraws for empty groups");
  }
  r.ci_low = percentile(r.replicates, 2.5);
  r.ci_high = percentile(r.replicates, 97.5);
  return r;
}

GroupMapping map_groups(std::span<const std::string> levels,
                        const std::map<std::string, int>& mapping) {
  bool has0 = false, has1 = false;
  for (const auto& [level, g] : mapping) {
    if (g != 0 && g != 1) {
      throw Error(ErrorCode::kArgument, "group mapping for '" + level + "' must be 0 or 1");
    }
    (g ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw Error(ErrorCode::kArgument, "group mapping needs both 0 and 1");
  GroupMapping out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    auto it = mapping.find(levels[i]);
    if (it == mapping.end()) {
      ++out.dropped;
      continue;
    }
    out.group.push_back(static_cast<std::uint8_t>(it->second));
    out.kept.push_back(i);
  }
  return out;
}

}  // namespace dtsurv
