#include "fixtures.hpp"

#include <cmath>

#include "dtsurv/hazard.hpp"
#include "dtsurv/policy.hpp"

using namespace dtsurv;
using fixtures::clicks;
using fixtures::enrollment;

namespace {

std::vector<std::size_t> all_rows(const PersonPeriodTable& t) {
  std::vector<std::size_t> r(t.rows());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = k;
  return r;
}

struct Fitted {
  fixtures::Cohort cohort;
  HazardModel model;
  std::vector<double> baseline;
};

const Fitted& fitted() {
  static const Fitted f = [] {
    SynthSpec spec;
    spec.n_enrollments = 250;
    spec.effects = {{"inactive", 1.2}, {"recency", 0.2}};
    Fitted out;
    out.cohort = fixtures::synth_cohort(spec);
    const auto rows = all_rows(out.cohort.table);
    out.model = fit_hazard(out.cohort.table, rows, out.cohort.table.event,
                           fit_codec(out.cohort.table, rows), {});
    out.baseline = predict_hazards(out.model, out.cohort.table);
    return out;
  }();
  return f;
}

PolicyScenario mech(double a0, double a1) {
  PolicyScenario s;
  s.scenario_id = "m";
  s.branch = PolicyBranch::kMechanismAware;
  s.alpha_week0 = a0;
  s.alpha_week1 = a1;
  return s;
}

}  // namespace

TEST_CASE("activation rule") {
  // recency = (0, 1, 0, 0, 0)
  const auto t = fixtures::table({enrollment(1, false, 4)},
                                 {clicks({{0, 1}, {2, 1}, {3, 1}, {4, 1}})});
  const auto a = compute_activation(t, 1, 2);
  REQUIRE(a.t_star[0].has_value());
  CHECK(*a.t_star[0] == 1);
  CHECK(a.active == std::vector<std::uint8_t>{0, 1, 1, 0, 0});
  CHECK(a.window_offset == std::vector<std::int32_t>{-1, 0, 1, -1, -1});

  const auto closed = compute_activation(t, 1, 2, false);
  CHECK(closed.active == std::vector<std::uint8_t>{0, 1, 1, 1, 0});

  const auto always = fixtures::table({enrollment(2, false, 3)},
                                      {clicks({{0, 1}, {1, 1}, {2, 1}, {3, 1}})});
  const auto b = compute_activation(always, 1, 2);
  CHECK_FALSE(b.t_star[0].has_value());
  CHECK(b.triggered == 0);
  CHECK(b.active_rows == 0);
}

TEST_CASE("event rows are never treated") {
  // recency = (0, 1, 2): trigger at week 1, window {1, 2}, week 2 is the event.
  const auto t = fixtures::table({enrollment(1, true, 2)}, {clicks({{0, 1}})});
  const auto a = compute_activation(t, 1, 2);
  CHECK(a.active == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(a.event_rows_forced_inactive == 1);

  // Trigger exactly at the terminal event week.
  const auto u = fixtures::table({enrollment(2, true, 2)}, {clicks({{0, 1}, {1, 1}})});
  const auto b = compute_activation(u, 1, 2);
  CHECK(*b.t_star[0] == 2);
  CHECK(b.active_rows == 0);
  CHECK(b.event_rows_forced_inactive == 1);
}

TEST_CASE("retrigger opens later windows") {
  // recency = (1, 0, 0, 1, 2, 0, 1)
  const auto t = fixtures::table({enrollment(1, false, 6)},
                                 {clicks({{1, 1}, {2, 1}, {5, 1}})});
  const auto once = compute_activation(t, 1, 1);
  CHECK(once.active == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0, 0});
  const auto again = compute_activation(t, 1, 1, true, true);
  CHECK(again.active == std::vector<std::uint8_t>{1, 0, 0, 1, 1, 0, 1});
}

TEST_CASE("shock rescoring") {
  const auto t = fixtures::table({enrollment(1, false, 4)},
                                 {clicks({{0, 1}, {2, 1}, {3, 1}, {4, 1}})});
  const auto a = compute_activation(t, 1, 2);
  const std::vector<double> h(5, 0.2);
  const auto s = shock_rescore(h, a, 0.08);
  CHECK(s[1] == doctest::Approx(0.184).epsilon(1e-15));
  CHECK(s[0] == 0.2);
  CHECK(s[3] == 0.2);
  CHECK(shock_rescore(h, a, 0.0) == h);
}

TEST_CASE("click multipliers") {
  CHECK(click_multiplier(kDefaultDecay, 0, 0.35, 0.1) == 1.35);
  CHECK(click_multiplier(kDefaultDecay, 1, 0.35, 0.1) == 1.1);
  CHECK(click_multiplier(kDefaultDecay, 2, 0.35, 0.1) == 1.0);
  CHECK(click_multiplier(kHoldDecay, 2, 0.35, 0.1) == 1.1);
  CHECK(fixtures::code_of([] { click_multiplier("linear", 0, 0.3, 0.1); }) ==
        ErrorCode::kArgument);
  PolicyScenario s;
  s.scenario_id = "x";
  s.delta_shock = 1.0;
  CHECK(fixtures::code_of([&] { s.validate(); }) == ErrorCode::kArgument);
}

TEST_CASE("mechanism-aware overwrite") {
  const auto& f = fitted();
  // recency = (0, 1, 0, 0): window {1, 2}; week 1 has zero clicks, week 2 has 10.
  const auto t = fixtures::table({enrollment(1, false, 3)},
                                 {clicks({{0, 4}, {2, 10}, {3, 2}})});
  const auto a = compute_activation(t, 1, 2);
  const std::vector<double> base = predict_hazards(f.model, t);
  auto sc = mech(0.35, 0.10);
  const auto m = mech_rescore(f.model, t, base, a, sc);
  CHECK(m.total_clicks[1] == 0.0);  // zero stays zero
  CHECK(m.active[1] == 0);
  CHECK(m.total_clicks[2] == doctest::Approx(11.0));  // offset 1: 10 * 1.1
  CHECK(m.recency == t.recency);
  CHECK(m.rows_changed == 1);
  CHECK(m.hazards[0] == base[0]);
  CHECK(m.hazards[3] == base[3]);
  CHECK(m.hazards[2] != base[2]);

  // recency = (1, 0, 0): window {0, 1}, 10 clicks at offset 1.
  const auto u = fixtures::table({enrollment(2, false, 2)}, {clicks({{1, 10}})});
  const auto b = compute_activation(u, 1, 2);
  CHECK(*b.t_star[0] == 0);
  const auto m2 = mech_rescore(f.model, u, predict_hazards(f.model, u), b, sc);
  CHECK(m2.total_clicks[1] == doctest::Approx(11.0));
  PolicyScenario s0 = sc;
  s0.alpha_week1 = 0.35;
  CHECK(mech_rescore(f.model, u, predict_hazards(f.model, u), b, s0).total_clicks[1] ==
        doctest::Approx(13.5));

  // alpha = (0, 0) reproduces the baseline exactly.
  const auto& c = f.cohort.table;
  const auto act = compute_activation(c, 1, 2);
  const auto z = mech_rescore(f.model, c, f.baseline, act, mech(0, 0));
  CHECK(z.hazards == f.baseline);
  CHECK(z.rows_changed == 0);
}

TEST_CASE("mechanism-aware propagation keeps the recursions") {
  const auto& f = fitted();
  const auto& c = f.cohort.table;
  const auto act = compute_activation(c, 1, 3);
  PolicyScenario sc = mech(0.5, 0.2);
  sc.decay_type = kHoldDecay;
  const auto m = mech_rescore(f.model, c, f.baseline, act, sc);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t r = c.begin_row(i); r < c.end_row(i); ++r) {
      if (!act.active[r]) CHECK(m.total_clicks[r] == c.total_clicks[r]);
      if (c.event[r]) CHECK(m.total_clicks[r] == c.total_clicks[r]);
      const bool a = m.active[r] != 0;
      CHECK(a == (m.total_clicks[r] > 0));
      if (r > c.begin_row(i)) {
        CHECK(m.recency[r] == (a ? 0 : m.recency[r - 1] + 1));
        CHECK(m.streak[r] == (a ? m.streak[r - 1] + 1 : 0));
      }
    }
  }
  CHECK(m.overwrites.size() == 4);
  CHECK(m.overwrites[0].rows_changed == m.rows_changed);
  CHECK(m.overwrites[0].rows_changed_outside_window == 0);
}

TEST_CASE("contrast equals the hand product difference") {
  const auto t = fixtures::table({enrollment(1, false, 1), enrollment(2, true, 1)},
                                 {clicks({{0, 1}}), clicks({{0, 1}})});
  const std::vector<double> h0{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> h1{0.05, 0.2, 0.3, 0.2};
  const auto c = scenario_contrast(t, h0, h1, 3, "toy");
  const double s0[] = {(0.9 + 0.7) / 2, (0.9 * 0.8 + 0.7 * 0.6) / 2};
  const double s1[] = {(0.95 + 0.7) / 2, (0.95 * 0.8 + 0.7 * 0.8) / 2};
  for (int k = 0; k < 4; ++k) {
    const int w = std::min(k, 1);
    CHECK(std::abs(c.s_baseline[k] - s0[w]) < 1e-12);
    CHECK(std::abs(c.s_policy[k] - s1[w]) < 1e-12);
    CHECK(std::abs(c.delta[k] - (s1[w] - s0[w])) < 1e-12);
  }
  const auto z = scenario_contrast(t, h0, h0, 3);
  for (double d : z.delta) CHECK(d == 0.0);
  CHECK(fixtures::code_of([&] { c.delta_at(4); }) == ErrorCode::kArgument);
}

TEST_CASE("mean hazard change on changed rows") {
  const std::vector<double> a{0.1, 0.2, 0.3};
  const std::vector<double> b{0.1, 0.1, 0.4};
  std::size_t n = 0;
  CHECK(mean_hazard_delta_changed(a, b, &n) == doctest::Approx(0.0));
  CHECK(n == 2);
}

TEST_CASE("grid shape, caching and single-point consistency") {
  const auto& f = fitted();
  const auto& c = f.cohort.table;
  GridSpec spec;
  CHECK(spec.size() == 216);

  GridSpec one;
  one.r_star = {1};
  one.window_W = {2};
  one.decay_type = {kDefaultDecay};
  one.alpha_week0 = {0.35};
  one.alpha_week1 = {0.10};
  one.delta_shock = {0.20};
  const auto g = sensitivity_grid(f.model, c, f.baseline, one, 38);
  REQUIRE(g.size() == 1);
  const auto act = compute_activation(c, 1, 2);
  const auto shock = scenario_contrast(c, f.baseline, shock_rescore(f.baseline, act, 0.2), 38);
  CHECK(g[0].shock.delta == shock.delta);
  const auto m = mech_rescore(f.model, c, f.baseline, act, mech(0.35, 0.10));
  CHECK(g[0].mech.delta == scenario_contrast(c, f.baseline, m.hazards, 38).delta);
  CHECK(g[0].mech_rows_changed == m.rows_changed);
  CHECK(g[0].shock.scenario_id == "grid_0_shock");

  GridSpec small = spec;
  small.alpha_week0 = {0.35};
  small.alpha_week1 = {0.10};
  const auto rows = sensitivity_grid(f.model, c, f.baseline, small, 38);
  REQUIRE(rows.size() == 24);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].config_id == k);
    for (double d : rows[k].shock.delta) CHECK(d >= 0.0);
    if (k % 3 != 0) {
      for (std::size_t t = 0; t < rows[k].shock.delta.size(); ++t) {
        CHECK(rows[k].shock.delta[t] >= rows[k - 1].shock.delta[t]);
      }
    }
  }
}
