#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtsurv/codec.hpp"
#include "dtsurv/logistic.hpp"
#include "dtsurv/person_period.hpp"

namespace dtsurv {

struct HazardModel {
  FeatureCodec codec;
  double intercept = 0.0;
  std::vector<double> coefficients;  // aligned with codec.coefficient_names()
  SigmoidCalibration calibration;
  double lambda = 1.0;
  double weight_positive = 1.0;
  double weight_negative = 1.0;
  // Constant-zero model, used when the training rows hold no positive label
  // (e.g. a censoring model on a cohort without censoring).
  bool zero_hazard = false;

  int iterations = 0;
  double gradient_norm = 0.0;
  int calibration_folds_used = 0;

  double raw_score(const EncodedRows& rows, std::size_t r) const;
};

struct HazardOptions {
  LogisticOptions solver;
  FeatureSpec features = FeatureSpec::primary();
  std::uint64_t seed = 42;
};

// Balanced class weights n_total / (2 n_c). Throws kTraining on one class.
std::pair<double, double> balanced_class_weights(std::span<const std::uint8_t> y);

// Uncalibrated fit (calibration left at identity a=-1, b=0).
HazardModel fit_hazard(const PersonPeriodTable& table,
                       std::span<const std::size_t> rows,
                       std::span<const std::uint8_t> labels,
                       const FeatureCodec& codec, const HazardOptions& options);

// Grouped out-of-fold sigmoid calibration followed by a full-train refit.
// `row_fold[r]` is the fold of row r (or -1 for rows outside the train set);
// only `rows` are used.
HazardModel fit_calibrated_hazard(const PersonPeriodTable& table,
                                  std::span<const std::size_t> rows,
                                  std::span<const std::uint8_t> labels,
                                  std::span<const int> row_fold,
                                  const HazardOptions& options);

std::vector<double> raw_scores(const HazardModel& model,
                               const PersonPeriodTable& table,
                               std::span<const std::size_t> rows);
std::vector<double> raw_scores(const HazardModel& model,
                               const PersonPeriodTable& table,
                               const DynamicColumns& dynamic,
                               std::span<const std::size_t> rows);

// Calibrated hazards in (0, 1), same order as `rows`.
std::vector<double> predict_hazards(const HazardModel& model,
                                    const PersonPeriodTable& table,
                                    std::span<const std::size_t> rows);
std::vector<double> predict_hazards(const HazardModel& model,
                                    const PersonPeriodTable& table,
                                    const DynamicColumns& dynamic,
                                    std::span<const std::size_t> rows);
// Hazards for every row of the table.
std::vector<double> predict_hazards(const HazardModel& model,
                                    const PersonPeriodTable& table);

struct SurvivalCurve {
  std::vector<double> hazards;
  std::vector<double> survival;  // S(t) = prod_{k<=t} (1 - h_k)
  std::size_t clamped = 0;       // hazards clamped to 1 - 1e-12
};

SurvivalCurve reconstruct_survival(std::span<const double> hazards);

// Survival for every row of the table, per enrollment segment.
std::vector<double> survival_by_row(const PersonPeriodTable& table,
                                    std::span<const double> hazards);

// S_i(min(t, t_final_i)): curves held constant after their last week.
double survival_at(const PersonPeriodTable& table, std::span<const double> survival,
                   std::size_t enrollment, int t);

enum class AblationVariant { kFull, kNoRecencyStreak, kNoActivity };

AblationVariant parse_ablation_variant(const std::string& name);
std::string to_string(AblationVariant variant);
FeatureSpec features_for(AblationVariant variant);

std::vector<std::uint8_t> event_labels(const PersonPeriodTable& table);

}  // namespace dtsurv
