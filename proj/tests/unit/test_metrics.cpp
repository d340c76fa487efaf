#include "fixtures.hpp"

#include <cmath>

#include "dtsurv/censoring.hpp"
#include "dtsurv/evaluation.hpp"
#include "dtsurv/hazard.hpp"
#include "dtsurv/metrics.hpp"

using namespace dtsurv;
using fixtures::clicks;
using fixtures::enrollment;

namespace {

// Fraction of (positive, negative) pairs ordered correctly, ties 1/2.
double pair_auc(const std::vector<std::uint8_t>& y, const std::vector<double>& s) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (!y[i] || y[j]) continue;
      den += 1;
      num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return num / den;
}

}  // namespace

TEST_CASE("auc") {
  const std::vector<std::uint8_t> y{1, 0, 1, 0};
  const std::vector<double> s{0.9, 0.8, 0.7, 0.1};
  CHECK(auc(y, s) == 0.75);

  const std::vector<double> perfect{0.9, 0.1, 0.8, 0.2};
  CHECK(auc(y, perfect) == 1.0);

  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::uint8_t> yy;
    std::vector<double> ss;
    for (int i = 0; i < 25; ++i) {
      yy.push_back(i % 3 == 0);
      ss.push_back(double(rng.uniform_index(6)));  // plenty of ties
    }
    CHECK(auc(yy, ss) == doctest::Approx(pair_auc(yy, ss)).epsilon(1e-14));
  }

  std::vector<std::uint8_t> big_y;
  std::vector<double> big_s;
  for (int i = 0; i < 20000; ++i) {
    big_y.push_back(rng.bernoulli(0.3));
    big_s.push_back(rng.uniform01());
  }
  CHECK(std::abs(auc(big_y, big_s) - 0.5) < 0.02);

  const std::vector<std::uint8_t> one{1, 1};
  const std::vector<double> two{0.1, 0.2};
  CHECK(fixtures::code_of([&] { auc(one, two); }) == ErrorCode::kUndefinedMetric);
}

TEST_CASE("ipcw brier") {
  const std::vector<HorizonLabel> exact{{1, 1.0, 1.0}, {0, 0.0, 1.0}};
  CHECK(brier_ipcw(exact).mean == 0.0);

  const std::vector<HorizonLabel> one{{1, 0.5, 2.0}};
  CHECK(brier_ipcw(one).mean == 0.5);
  CHECK(brier_ipcw(one).weight_normalized == 0.25);

  // Event by T (w = 1/G(t_event) = 1/0.8), event-free through T (w = 1/G(T) =
  // 1/0.5), censored before T (w = 0).
  const std::vector<HorizonLabel> mixed{{1, 0.6, 1.25}, {0, 0.3, 2.0}, {0, 0.2, 0.0}};
  const double num = 1.25 * 0.16 + 2.0 * 0.09;
  CHECK(brier_ipcw(mixed).mean == doctest::Approx(num / 3).epsilon(1e-15));
  CHECK(brier_ipcw(mixed).weight_normalized == doctest::Approx(num / 3.25).epsilon(1e-15));

  const std::vector<HorizonLabel> zero{{0, 0.2, 0.0}};
  CHECK(std::isnan(brier_ipcw(zero).weight_normalized));
}

TEST_CASE("integrated brier") {
  const std::vector<double> c(7, 0.13);
  CHECK(integrated_brier(c) == doctest::Approx(0.13));
  const std::vector<double> two{0.0, 1.0};
  CHECK(integrated_brier(two) == 0.5);
}

TEST_CASE("discrete concordance") {
  std::vector<ConcordanceSubject> s;
  for (int t = 1; t <= 5; ++t) s.push_back({-double(t), t, true, 1.0});
  CHECK(cindex_discrete(s, 10).cindex == 1.0);
  for (auto& x : s) x.risk = 0.3;
  CHECK(cindex_discrete(s, 10).cindex == 0.5);

  // Three subjects: event at 1 (risk .6, w 1.25), censored at 1 (risk .7),
  // event at 3 (risk .2, w 2). Comparable: (a,b) tie in time with b censored,
  // (a,c); (c, nobody). Weighted by w_i^2 = 1.5625 on both pairs.
  const std::vector<ConcordanceSubject> hand{{0.6, 1, true, 1.25}, {0.7, 1, false, 1.0},
                                             {0.2, 3, true, 2.0}};
  const auto r = cindex_discrete(hand, 3);
  CHECK(r.comparable_pairs == 2);
  CHECK(r.cindex == 0.5);

  const std::vector<ConcordanceSubject> late{{0.6, 5, true, 1.0}, {0.7, 6, false, 1.0}};
  CHECK(fixtures::code_of([&] { cindex_discrete(late, 3); }) == ErrorCode::kUndefinedMetric);
}

TEST_CASE("calibration error") {
  const std::vector<double> p{0.2, 0.2, 0.2, 0.2};
  const std::vector<std::uint8_t> y{1, 0, 1, 0};
  CHECK(ece(p, y, 15) == doctest::Approx(0.3));

  const std::vector<double> exact{0.0, 0.0, 1.0, 0.5, 0.5};
  const std::vector<std::uint8_t> ey{0, 0, 1, 1, 0};
  CHECK(ece(exact, ey, 10) == 0.0);

  const auto bins = calibration_bins(exact, ey, 10);
  CHECK(bins[9].n == 1);  // p = 1 lands in the top bin
  CHECK(bins[5].n == 2);
}

TEST_CASE("by-group diagnostics match per-group recomputation") {
  const std::vector<std::string> g{"F", "M", "F", "M", "F", "M"};
  const std::vector<double> p{0.9, 0.2, 0.1, 0.6, 0.4, 0.3};
  const std::vector<std::uint8_t> y{1, 0, 0, 1, 1, 0};
  const auto d = by_group_diagnostics(g, p, y, 15);
  REQUIRE(d.size() == 2);
  CHECK(d[0].group == "F");
  CHECK(d[0].rows == 3);
  CHECK(d[0].auc == 1.0);
  CHECK(d[0].brier == doctest::Approx((0.01 + 0.01 + 0.36) / 3));
  const std::vector<double> mp{0.2, 0.6, 0.3};
  const std::vector<std::uint8_t> my{0, 1, 0};
  CHECK(d[1].ece == doctest::Approx(ece(mp, my, 15)));
  CHECK(d[1].brier == doctest::Approx(brier_unweighted(mp, my)));

  const std::vector<std::string> same{"A", "A", "A", "B", "B", "B"};
  const std::vector<double> sp{0.9, 0.2, 0.4, 0.9, 0.2, 0.4};
  const std::vector<std::uint8_t> sy{1, 0, 1, 1, 0, 1};
  const auto s = by_group_diagnostics(same, sp, sy, 15);
  CHECK(s[0].auc == s[1].auc);
  CHECK(s[0].brier == s[1].brier);
  CHECK(s[0].ece == s[1].ece);

  const std::vector<std::uint8_t> single{1, 1, 1, 1, 1, 1};
  CHECK(std::isnan(by_group_diagnostics(g, p, single, 15)[0].auc));
}

TEST_CASE("horizon labels on a table") {
  // A: event week 1; B: censored week 1; C: event-free through week 3.
  const auto t = fixtures::table(
      {enrollment(1, true, 1), enrollment(2, false, 1), enrollment(3, false, 3)},
      {clicks({{0, 1}}), clicks({{0, 1}}), clicks({{0, 1}})});
  const std::vector<double> h{0.1, 0.5, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1};
  const std::vector<double> gh{0.2, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1};
  const auto s = survival_by_row(t, h);
  const auto g = censoring_survival_by_row(t, gh);
  const auto ep = primary_labels(t);
  const auto l = horizon_labels(t, s, g, ep, 2, 0.05, 20);
  CHECK(l[0].y == 1);
  CHECK(l[0].p == doctest::Approx(1 - 0.45));
  CHECK(l[0].w == doctest::Approx(1 / 0.8));
  CHECK(l[1].w == 0.0);
  CHECK(l[2].y == 0);
  CHECK(l[2].w == doctest::Approx(1 / 0.81));
  CHECK(l[2].p == doctest::Approx(1 - 0.729));
}
