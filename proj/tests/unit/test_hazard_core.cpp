#include "fixtures.hpp"

#include <cmath>
#include <functional>

#include "dtsurv/hazard.hpp"
#include "dtsurv/kernels.hpp"
#include "dtsurv/logistic.hpp"
#include "dtsurv/metrics.hpp"
#include "dtsurv/model_io.hpp"
#include "dtsurv/splitting.hpp"

using namespace dtsurv;
using fixtures::clicks;
using fixtures::enrollment;

namespace {

std::vector<std::size_t> all_rows(const PersonPeriodTable& t) {
  std::vector<std::size_t> r(t.rows());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = k;
  return r;
}

// Golden-section minimum of a unimodal function on [lo, hi].
double golden(const std::function<double(double)>& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200; ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = f(d);
    }
  }
  return (a + b) / 2.0;
}

double logloss(int y, double z) {
  return y ? std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

EncodedRows dense(std::size_t n, std::size_t p, const std::vector<double>& x) {
  EncodedRows e;
  e.n_rows = n;
  e.n_numeric = p;
  e.width = p;
  e.numeric = x;
  return e;
}

HazardOptions small_options() {
  HazardOptions o;
  o.solver.max_iter = 100;
  return o;
}

}  // namespace

TEST_CASE("codec standardizes with the population deviation") {
  const auto t = fixtures::table({enrollment(1, false, 2)}, {clicks({{0, 1}, {1, 2}, {2, 3}})});
  FeatureSpec spec;
  spec.numeric = {"total_clicks"};
  const auto codec = fit_codec(t, all_rows(t), spec);
  REQUIRE(codec.numeric_columns.size() == 1);
  CHECK(codec.means[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(codec.stddevs[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("unseen categorical level encodes as a zero block") {
  auto a = enrollment(1, false, 0, "A");
  auto b = enrollment(2, false, 0, "B");
  auto c = enrollment(3, false, 0, "C");
  const auto t = fixtures::table({a, b, c}, {clicks({{0, 1}}), clicks({{0, 2}}), clicks({{0, 3}})});
  FeatureSpec spec;
  spec.categorical = {"gender"};
  const std::vector<std::size_t> train{0, 1};
  const auto codec = fit_codec(t, train, spec);
  CHECK(codec.category_levels[0] == std::vector<std::string>{"A", "B"});
  const std::vector<std::size_t> rows{0, 1, 2};
  const auto enc = codec.transform(t, rows);
  CHECK(enc.onehot_row(0)[0] == 0);
  CHECK(enc.onehot_row(1)[0] == 1);
  CHECK(enc.onehot_row(2)[0] == -1);
}

TEST_CASE("constant numeric column is dropped") {
  const auto t = fixtures::table({enrollment(1, false, 2)}, {clicks({{0, 1}, {1, 2}, {2, 3}})});
  FeatureSpec spec;
  spec.numeric = {"total_clicks", "studied_credits"};
  const auto codec = fit_codec(t, all_rows(t), spec);
  CHECK(codec.numeric_columns == std::vector<std::string>{"total_clicks"});
  CHECK(codec.dropped_columns == std::vector<std::string>{"studied_credits"});
}

TEST_CASE("week levels sort numerically") {
  const auto t = fixtures::table({enrollment(1, false, 11)}, {clicks({{0, 1}})});
  FeatureSpec spec;
  spec.categorical = {"week"};
  const auto codec = fit_codec(t, all_rows(t), spec);
  CHECK(codec.category_levels[0][2] == "2");
  CHECK(codec.category_levels[0][10] == "10");
}

TEST_CASE("balanced class weights") {
  const std::vector<std::uint8_t> balanced{0, 1, 0, 1};
  auto [wp, wn] = balanced_class_weights(balanced);
  CHECK(wp == 1.0);
  CHECK(wn == 1.0);
  const std::vector<std::uint8_t> skewed{0, 0, 0, 1};
  std::tie(wp, wn) = balanced_class_weights(skewed);
  CHECK(wp == 2.0);
  CHECK(wn == doctest::Approx(4.0 / 6.0));
  const std::vector<std::uint8_t> one{1, 1};
  CHECK(fixtures::code_of([&] { balanced_class_weights(one); }) == ErrorCode::kTraining);
}

TEST_CASE("one-feature fit matches an independent minimizer") {
  // {(0,0),(1,1)} x 100, unit weights, lambda = 1 on the slope only.
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 100; ++i) {
    x.push_back(0.0); y.push_back(0);
    x.push_back(1.0); y.push_back(1);
  }
  const auto rows = dense(x.size(), 1, x);
  const std::vector<double> w(x.size(), 1.0);
  LogisticOptions o;
  o.lambda = 1.0;
  o.tolerance = 1e-10;
  const auto fit = fit_weighted_logistic(rows, y, w, o);

  auto objective = [&](double b0, double b1) {
    return 100.0 * logloss(0, b0) + 100.0 * logloss(1, b0 + b1) + 0.5 * b1 * b1;
  };
  auto best_b1 = [&](double b0) { return golden([&](double b1) { return objective(b0, b1); }, -50, 50); };
  const double b0 = golden([&](double v) { return objective(v, best_b1(v)); }, -50, 50);
  const double b1 = best_b1(b0);
  CHECK(std::abs(fit.theta[0] - b0) < 1e-4);
  CHECK(std::abs(fit.theta[1] - b1) < 1e-4);
}

TEST_CASE("separable data stays finite under the penalty") {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(-1.0 - 0.01 * i); y.push_back(0);
    x.push_back(1.0 + 0.01 * i); y.push_back(1);
  }
  const auto rows = dense(x.size(), 1, x);
  const std::vector<double> w(x.size(), 1.0);
  const auto fit = fit_weighted_logistic(rows, y, w, {});
  CHECK(std::isfinite(fit.theta[1]));
  CHECK(fit.theta[1] > 0.0);
  // Majority baseline: constant 0.5 prediction, loss n log 2.
  const std::vector<double> zero{0.0, 0.0};
  CHECK(penalized_objective(rows, y, w, fit.theta, 1.0) <
        penalized_objective(rows, y, w, zero, 1.0));
}

TEST_CASE("analytic gradient agrees with central differences") {
  Rng rng(11);
  const std::size_t n = 60, p = 3;
  EncodedRows rows;
  rows.n_rows = n;
  rows.n_numeric = p;
  rows.n_categorical = 1;
  rows.width = p + 3;
  for (std::size_t i = 0; i < n * p; ++i) rows.numeric.push_back(rng.uniform01() * 4 - 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = static_cast<std::int32_t>(rng.uniform_index(4));
    rows.onehot.push_back(l == 3 ? -1 : static_cast<std::int32_t>(p) + l);
  }
  std::vector<std::uint8_t> y(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.bernoulli(0.3);
    w[i] = y[i] ? 1.7 : 0.6;
  }
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> theta(1 + rows.width);
    for (auto& v : theta) v = rng.uniform01() * 2 - 1;
    const auto g = penalized_gradient(rows, y, w, theta, 0.7);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double h = 1e-5;
      auto plus = theta, minus = theta;
      plus[j] += h;
      minus[j] -= h;
      const double fd = (penalized_objective(rows, y, w, plus, 0.7) -
                         penalized_objective(rows, y, w, minus, 0.7)) / (2 * h);
      CHECK(std::abs(fd - g[j]) / std::max(1.0, std::abs(g[j])) < 1e-5);
    }
  }
}

TEST_CASE("solver failures carry codes") {
  std::vector<double> x{0.1, 0.9, 0.4, 0.3, 0.8, 0.2};
  std::vector<std::uint8_t> y{0, 1, 1, 0, 1, 0};
  const auto rows = dense(x.size(), 1, x);
  const std::vector<double> w(x.size(), 1.0);
  LogisticOptions o;
  o.max_iter = 1;
  o.tolerance = 1e-14;
  try {
    fit_weighted_logistic(rows, y, w, o);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConvergence);
    CHECK(std::string(e.what()).find("gradient") != std::string::npos);
  }

  const auto t = fixtures::table({enrollment(1, true, 2)}, {clicks({{0, 1}, {1, 2}})});
  const FeatureCodec empty = fit_codec(t, all_rows(t), FeatureSpec{});
  CHECK(fixtures::code_of([&] {
          fit_hazard(t, all_rows(t), t.event, empty, small_options());
        }) == ErrorCode::kTraining);
}

TEST_CASE("sigmoid calibration") {
  SigmoidCalibration identity;
  CHECK(identity.apply(0.0) == 0.5);

  // Scores that are already calibrated log-odds: the fitted map is close to
  // the identity on the probability scale.
  Rng rng(3);
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 20000; ++i) {
    const double v = rng.uniform01() * 6 - 3;
    s.push_back(v);
    y.push_back(rng.bernoulli(kernels::sigmoid(v)));
  }
  const auto cal = fit_sigmoid(s, y);
  for (double v = -3; v <= 3; v += 0.25) {
    CHECK(std::abs(cal.apply(v) - kernels::sigmoid(v)) < 0.02);
  }
  const std::vector<std::uint8_t> ones(s.size(), 1);
  CHECK(fixtures::code_of([&] { fit_sigmoid(s, ones); }) == ErrorCode::kCalibration);
}

TEST_CASE("prediction rules") {
  SynthSpec spec;
  spec.n_enrollments = 120;
  spec.effects = {{"inactive", 1.0}};
  const auto c = fixtures::synth_cohort(spec);
  const auto rows = all_rows(c.table);
  const auto codec = fit_codec(c.table, rows);

  HazardModel zero;
  zero.codec = codec;
  zero.coefficients.assign(codec.width(), 0.0);
  for (double h : predict_hazards(zero, c.table)) CHECK(h == 0.5);

  const HazardModel m = fit_hazard(c.table, rows, c.table.event, codec, small_options());
  CHECK(predict_hazards(m, c.table) == predict_hazards(m, c.table));

  // Raising clicks moves the raw score in the direction of its coefficient.
  const auto names = codec.coefficient_names();
  const std::size_t j = std::find(names.begin(), names.end(), "total_clicks") - names.begin();
  std::vector<double> more = c.table.total_clicks;
  for (double& v : more) v += 5.0;
  auto dyn = DynamicColumns::of(c.table);
  dyn.total_clicks = more;
  const auto base = raw_scores(m, c.table, rows);
  const auto bumped = raw_scores(m, c.table, dyn, rows);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (m.coefficients[j] > 0) CHECK(bumped[r] > base[r]);
    else CHECK(bumped[r] < base[r]);
  }
}

TEST_CASE("survival reconstruction") {
  const std::vector<double> h{0.1, 0.2};
  const auto s = reconstruct_survival(h);
  CHECK(s.survival[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.survival[1] == doctest::Approx(0.72).epsilon(1e-15));

  const std::vector<double> zeros(5, 0.0);
  for (double v : reconstruct_survival(zeros).survival) CHECK(v == 1.0);

  const std::vector<double> constant(19, 0.05);
  CHECK(reconstruct_survival(constant).survival[18] ==
        doctest::Approx(std::pow(0.95, 19)).epsilon(1e-12));
  CHECK(reconstruct_survival(constant).survival[18] == doctest::Approx(0.3774).epsilon(1e-4));

  const std::vector<double> one{1.0};
  const auto clamped = reconstruct_survival(one);
  CHECK(clamped.clamped == 1);
  CHECK(clamped.survival[0] > 0.0);

  const std::vector<double> bad{1.5};
  CHECK(fixtures::code_of([&] { reconstruct_survival(bad); }) == ErrorCode::kArgument);
}

TEST_CASE("survival by row and held tail") {
  const auto t = fixtures::table({enrollment(1, true, 1), enrollment(2, false, 2)},
                                 {clicks({{0, 1}}), clicks({{0, 1}})});
  const std::vector<double> h{0.1, 0.2, 0.5, 0.5, 0.5};
  const auto s = survival_by_row(t, h);
  CHECK(s[1] == doctest::Approx(0.72));
  CHECK(s[4] == doctest::Approx(0.125));
  CHECK(survival_at(t, s, 0, 10) == s[1]);
  CHECK(survival_at(t, s, 0, -1) == 1.0);
  CHECK(survival_at(t, s, 1, 1) == s[3]);
}

TEST_CASE("ablation variants") {
  CHECK(parse_ablation_variant("no_activity") == AblationVariant::kNoActivity);
  CHECK(fixtures::code_of([] { parse_ablation_variant("nope"); }) == ErrorCode::kArgument);
  const auto a = features_for(AblationVariant::kNoRecencyStreak);
  CHECK(std::find(a.numeric.begin(), a.numeric.end(), "recency") == a.numeric.end());
  CHECK(std::find(a.numeric.begin(), a.numeric.end(), "streak") == a.numeric.end());
  CHECK(a.numeric.size() == 4);
  const auto b = features_for(AblationVariant::kNoActivity);
  CHECK(std::find(b.numeric.begin(), b.numeric.end(), "total_clicks") == b.numeric.end());
  CHECK(features_for(AblationVariant::kFull).numeric.size() == 6);
  CHECK(features_for(AblationVariant::kFull).categorical.size() == 6);
}

TEST_CASE("calibrated fit with grouped folds, and model file round trip") {
  SynthSpec spec;
  spec.n_enrollments = 400;
  spec.effects = {{"inactive", 1.2}, {"recency", 0.15}};
  const auto c = fixtures::synth_cohort(spec);
  auto sr = stratified_split(c.table.enrollments, {4, 0.3, 42});
  grouped_kfold(sr.assignments, 5, 42);
  const auto split = resolve_split(c.table, sr.assignments);
  const auto m = fit_calibrated_hazard(c.table, split.train_rows, c.table.event, split.row_fold,
                                       small_options());
  CHECK(m.calibration_folds_used == 5);
  const auto h = predict_hazards(m, c.table, split.train_rows);
  double mean = 0, rate = 0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    mean += h[k];
    rate += c.table.event[split.train_rows[k]];
  }
  CHECK(std::abs(mean - rate) / double(h.size()) < 0.01);

  const auto text = serialize_model(m, "hazard");
  const auto back = deserialize_model(text, "hazard");
  CHECK(predict_hazards(back, c.table) == predict_hazards(m, c.table));
  CHECK(serialize_model(back, "hazard") == text);
  CHECK(fixtures::code_of([&] { deserialize_model(text, "censoring"); }) == ErrorCode::kSchema);
}
