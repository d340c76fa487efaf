#include "fixtures.hpp"

#include <cmath>

#include "dtsurv/subgroup.hpp"

using namespace dtsurv;

namespace {

// Independent replay of one unstratified replicate.
double replay(const SubgroupSample& s, std::uint64_t seed, std::uint64_t b,
              std::size_t* redraws) {
  Rng rng(derive_seed(seed, "bootstrap", b));
  const std::size_t n = s.group.size();
  for (;;) {
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.uniform_index(n);
    double sum[2][2] = {{0, 0}, {0, 0}};
    double cnt[2] = {0, 0};
    for (auto i : idx) {
      sum[0][s.group[i]] += s.s_baseline[i];
      sum[1][s.group[i]] += s.s_policy[i];
      cnt[s.group[i]] += 1;
    }
    if (cnt[0] == 0 || cnt[1] == 0) {
      ++*redraws;
      continue;
    }
    const double gap0 = sum[0][1] / cnt[1] - sum[0][0] / cnt[0];
    const double gap1 = sum[1][1] / cnt[1] - sum[1][0] / cnt[0];
    return gap1 - gap0;
  }
}

}  // namespace

TEST_CASE("gap point estimate") {
  SubgroupSample s{{1, 1, 0, 0}, {0.9, 0.7, 0.8, 0.4}, {0.95, 0.75, 0.8, 0.5}};
  const auto g = delta_gap(s, 18);
  CHECK(g.mean1_baseline == doctest::Approx(0.8));
  CHECK(g.mean0_baseline == doctest::Approx(0.6));
  CHECK(g.gap_baseline == doctest::Approx(0.2));
  CHECK(g.gap_policy == doctest::Approx(0.85 - 0.65));
  CHECK(g.delta_gap == doctest::Approx(0.0));

  SubgroupSample same{{1, 0}, {0.5, 0.5}, {0.5, 0.5}};
  CHECK(delta_gap(same, 1).gap_baseline == 0.0);

  SubgroupSample single{{1, 0}, {0.9, 0.6}, {0.92, 0.7}};
  const auto one = delta_gap(single, 1);
  CHECK(one.delta_gap == doctest::Approx((0.92 - 0.7) - (0.9 - 0.6)));

  SubgroupSample flipped = single;
  for (auto& v : flipped.group) v = 1 - v;
  CHECK(delta_gap(flipped, 1).delta_gap == doctest::Approx(-one.delta_gap));

  SubgroupSample unchanged{{1, 0, 1}, {0.3, 0.6, 0.5}, {0.3, 0.6, 0.5}};
  CHECK(delta_gap(unchanged, 1).delta_gap == 0.0);
}

TEST_CASE("empty group level is reported") {
  SubgroupSample s{{1, 1}, {0.5, 0.6}, {0.5, 0.6}};
  CHECK(fixtures::code_of([&] { delta_gap(s, 1); }) == ErrorCode::kArgument);
}

TEST_CASE("bootstrap replicates replay by hand") {
  SubgroupSample s{{1, 0, 1, 0, 0}, {0.9, 0.6, 0.7, 0.5, 0.4}, {0.95, 0.62, 0.8, 0.5, 0.45}};
  const auto r = bootstrap_ci(s, 18, {.B = 2, .seed = 7, .stratified = false});
  REQUIRE(r.replicates.size() == 2);
  std::size_t redraws = 0;
  for (std::uint64_t b = 0; b < 2; ++b) {
    CHECK(std::abs(r.replicates[b] - replay(s, 7, b, &redraws)) < 1e-15);
  }
  CHECK(r.redraws == redraws);
  const double lo = std::min(r.replicates[0], r.replicates[1]);
  const double hi = std::max(r.replicates[0], r.replicates[1]);
  CHECK(r.ci_low == doctest::Approx(lo + 0.025 * (hi - lo)));
  CHECK(r.ci_high == doctest::Approx(lo + 0.975 * (hi - lo)));
}

TEST_CASE("tiny samples force redraws and stay reproducible") {
  SubgroupSample s{{1, 0}, {0.9, 0.6}, {0.95, 0.6}};
  const auto a = bootstrap_ci(s, 1, {.B = 50, .seed = 3});
  const auto b = bootstrap_ci(s, 1, {.B = 50, .seed = 3});
  CHECK(a.replicates == b.replicates);
  CHECK(a.redraws > 0);
  std::size_t redraws = 0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    CHECK(std::abs(a.replicates[k] - replay(s, 3, k, &redraws)) < 1e-15);
  }
  CHECK(a.redraws == redraws);
  // Only one resample has both groups: the point estimate itself.
  CHECK(a.ci_low == doctest::Approx(0.05));
  CHECK(a.ci_high == doctest::Approx(0.05));
}

TEST_CASE("identical enrollments give a zero-width interval") {
  SubgroupSample s{{1, 1, 0, 0}, {0.8, 0.8, 0.6, 0.6}, {0.85, 0.85, 0.6, 0.6}};
  const auto r = bootstrap_ci(s, 5, {.B = 100, .seed = 11, .stratified = true});
  CHECK(r.ci_low == doctest::Approx(0.05));
  CHECK(r.ci_high == doctest::Approx(0.05));
  CHECK(r.redraws == 0);
}

TEST_CASE("percentile interpolation") {
  CHECK(percentile({1, 2, 3, 4}, 50) == doctest::Approx(2.5));
  CHECK(percentile({4, 1, 3, 2}, 2.5) == doctest::Approx(1.075));
  CHECK(percentile({7}, 97.5) == 7.0);
  CHECK(fixtures::code_of([] { percentile({}, 50); }) == ErrorCode::kEmptyInput);
}

TEST_CASE("group mapping") {
  const std::vector<std::string> levels{"F", "M", "unknown", "F"};
  const auto m = map_groups(levels, {{"F", 1}, {"M", 0}});
  CHECK(m.group == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(m.kept == std::vector<std::size_t>{0, 1, 3});
  CHECK(m.dropped == 1);
  CHECK(fixtures::code_of([&] { map_groups(levels, {{"F", 1}}); }) == ErrorCode::kArgument);
  CHECK(fixtures::code_of([&] { map_groups(levels, {{"F", 2}, {"M", 0}}); }) ==
        ErrorCode::kArgument);
}
