#include "dtsurv/hazard.hpp"

#include <algorithm>
#include <map>

#include "dtsurv/error.hpp"
#include "dtsurv/kernels.hpp"

namespace dtsurv {

namespace {

std::vector<double> theta_of(const HazardModel& model) {
  std::vector<double> theta;
  theta.reserve(1 + model.coefficients.size());
  theta.push_back(model.intercept);
  theta.insert(theta.end(), model.coefficients.begin(), model.coefficients.end());
  return theta;
}

std::vector<double> scores_of(const HazardModel& model, const EncodedRows& encoded) {
  std::vector<double> out(encoded.n_rows);
  const auto theta = theta_of(model);
  kernels::parallel::linear_scores(encoded, theta, out);
  return out;
}

std::vector<double> calibrate_scores(const HazardModel& model, std::vector<double> scores) {
  for (double& s : scores) s = model.zero_hazard ? 0.0 : model.calibration.apply(s);
  return scores;
}

}  // namespace

double HazardModel::raw_score(const EncodedRows& rows, std::size_t r) const {
  double s = intercept;
  auto num = rows.numeric_row(r);
  for (std::size_t j = 0; j < num.size(); ++j) s += coefficients[j] * num[j];
  for (auto slot : rows.onehot_row(r)) {
    if (slot >= 0) s += coefficients[static_cast<std::size_t>(slot)];
  }
  return s;
}

std::pair<double, double> balanced_class_weights(std::span<const std::uint8_t> y) {
  double pos = 0, neg = 0;
  for (auto v : y) (v ? pos : neg) += 1.0;
  if (pos == 0 || neg == 0) {
    throw Error(ErrorCode::kTraining, "training labels hold a single class");
  }
  const double n = pos + neg;
  return {n / (2.0 * pos), n / (2.0 * neg)};
}

HazardModel fit_hazard(const PersonPeriodTable& table, std::span<const std::size_t> rows,
                       std::span<const std::uint8_t> labels, const FeatureCodec& codec,
                       const HazardOptions& options) {
  if (codec.width() == 0) throw Error(ErrorCode::kTraining, "empty design: no features to fit");
  std::vector<std::uint8_t> y(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) y[k] = labels[rows[k]];
  const auto [w_pos, w_neg] = balanced_class_weights(y);
  std::vector<double> w(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) w[k] = y[k] ? w_pos : w_neg;

  const EncodedRows encoded = codec.transform(table, rows);
  const LogisticFit fit = fit_weighted_logistic(encoded, y, w, options.solver);

  HazardModel model;
  model.codec = codec;
  model.intercept = fit.theta[0];
  model.coefficients.assign(fit.theta.begin() + 1, fit.theta.end());
  model.lambda = options.solver.lambda;
  model.weight_positive = w_pos;
  model.weight_negative = w_neg;
  model.iterations = fit.iterations;
  model.gradient_norm = fit.gradient_norm;
  return model;
}

HazardModel fit_calibrated_hazard(const PersonPeriodTable& table,
                                  std::span<const std::size_t> rows,
                                  std::span<const std::uint8_t> labels,
                                  std::span<const int> row_fold,
                                  const HazardOptions& options) {
  std::map<int, std::vector<std::size_t>> by_fold;
  for (auto r : rows) {
    if (row_fold[r] < 0) throw Error(ErrorCode::kContract, "calibration row without a fold");
    by_fold[row_fold[r]];
  }
  std::vector<double> pooled_scores;
  std::vector<std::uint8_t> pooled_labels;
  int used = 0;
  for (auto& [fold, held] : by_fold) {
    std::vector<std::size_t> fit_rows;
    held.clear();
    for (auto r : rows) (row_fold[r] == fold ? held : fit_rows).push_back(r);
    bool pos = false, neg = false;
    for (auto r : fit_rows) (labels[r] ? pos : neg) = true;
    if (fit_rows.empty() || !pos || !neg) {
      warn("calibration: fold " + std::to_string(fold) +
           " leaves a single-class training set; skipped");
      continue;
    }
    const FeatureCodec codec = fit_codec(table, fit_rows, options.features);
    const HazardModel fold_model = fit_hazard(table, fit_rows, labels, codec, options);
    const auto scores = raw_scores(fold_model, table, held);
    pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
    for (auto r : held) pooled_labels.push_back(labels[r]);
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::kCalibration, "every calibration fold is degenerate");

  const FeatureCodec codec = fit_codec(table, rows, options.features);
  HazardModel model = fit_hazard(table, rows, labels, codec, options);
  model.calibration = fit_sigmoid(pooled_scores, pooled_labels);
  model.calibration_folds_used = used;
  return model;
}

std::vector<double> raw_scores(const HazardModel& model, const PersonPeriodTable& table,
                               std::span<const std::size_t> rows) {
  return scores_of(model, model.codec.transform(table, rows));
}

std::vector<double> raw_scores(const HazardModel& model, const PersonPeriodTable& table,
                               const DynamicColumns& dynamic,
                               std::span<const std::size_t> rows) {
  return scores_of(model, model.codec.transform(table, dynamic, rows));
}

std::vector<double> predict_hazards(const HazardModel& model, const PersonPeriodTable& table,
                                    std::span<const std::size_t> rows) {
  if (model.zero_hazard) return std::vector<double>(rows.size(), 0.0);
  return calibrate_scores(model, raw_scores(model, table, rows));
}

std::vector<double> predict_hazards(const HazardModel& model, const PersonPeriodTable& table,
                                    const DynamicColumns& dynamic,
                                    std::span<const std::size_t> rows) {
  if (model.zero_hazard) return std::vector<double>(rows.size(), 0.0);
  return calibrate_scores(model, raw_scores(model, table, dynamic, rows));
}

std::vector<double> predict_hazards(const HazardModel& model, const PersonPeriodTable& table) {
  std::vector<std::size_t> all(table.rows());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  return predict_hazards(model, table, all);
}

SurvivalCurve reconstruct_survival(std::span<const double> hazards) {
  SurvivalCurve curve;
  curve.hazards.assign(hazards.begin(), hazards.end());
  curve.survival.resize(hazards.size());
  double s = 1.0;
  for (std::size_t t = 0; t < hazards.size(); ++t) {
    if (!(hazards[t] >= 0.0 && hazards[t] <= 1.0)) {
      throw Error(ErrorCode::kArgument, "hazard outside [0, 1]");
    }
    if (hazards[t] > kernels::kMaxHazard) {
      curve.hazards[t] = kernels::kMaxHazard;
      ++curve.clamped;
    }
    s *= 1.0 - curve.hazards[t];
    curve.survival[t] = s;
  }
  if (curve.clamped > 0) {
    warn("survival: " + std::to_string(curve.clamped) + " hazard(s) clamped to 1 - 1e-12");
  }
  return curve;
}

std::vector<double> survival_by_row(const PersonPeriodTable& table,
                                    std::span<const double> hazards) {
  if (hazards.size() != table.rows()) {
    throw Error(ErrorCode::kContract, "hazard vector does not match the table rows");
  }
  std::vector<double> out(hazards.size());
  kernels::parallel::segment_survival(hazards, table.offsets, out);
  return out;
}

double survival_at(const PersonPeriodTable& table, std::span<const double> survival,
                   std::size_t enrollment, int t) {
  if (t < 0) return 1.0;
  const std::size_t begin = table.begin_row(enrollment);
  const std::size_t len = table.end_row(enrollment) - begin;
  return survival[begin + std::min<std::size_t>(static_cast<std::size_t>(t), len - 1)];
}

AblationVariant parse_ablation_variant(const std::string& name) {
  if (name == "full") return AblationVariant::kFull;
  if (name == "no_recency_streak") return AblationVariant::kNoRecencyStreak;
  if (name == "no_activity") return AblationVariant::kNoActivity;
  throw Error(ErrorCode::kArgument, "unknown ablation variant '" + name + "'");
}

std::string to_string(AblationVariant variant) {
  switch (variant) {
    case AblationVariant::kFull: return "full";
    case AblationVariant::kNoRecencyStreak: return "no_recency_streak";
    case AblationVariant::kNoActivity: return "no_activity";
  }
  return {};
}

FeatureSpec features_for(AblationVariant variant) {
  const FeatureSpec full = FeatureSpec::primary();
  switch (variant) {
    case AblationVariant::kFull: return full;
    case AblationVariant::kNoRecencyStreak: {
      const std::vector<std::string> drop{"recency", "streak"};
      return full.without(drop);
    }
    case AblationVariant::kNoActivity: {
      const std::vector<std::string> drop{"total_clicks"};
      return full.without(drop);
    }
  }
  return full;
}

std::vector<std::uint8_t> event_labels(const PersonPeriodTable& table) {
  return table.event;
}

}  // namespace dtsurv
