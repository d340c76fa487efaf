#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dtsurv {

// Mann-Whitney AUC with ties counted 1/2. Throws kUndefinedMetric when a
// class is missing.
double auc(std::span<const std::uint8_t> labels, std::span<const double> scores);

struct HorizonLabel {
  std::uint8_t y = 0;   // 1{E = 1 and t_event <= T}
  double p = 0.0;       // 1 - S(T)
  double w = 0.0;       // IPCW weight at the applicable week (0 if censored before T)
};

struct BrierResult {
  double mean = 0.0;            // (1/n) sum w (Y - p)^2
  double weight_normalized = 0.0;  // sum w (Y - p)^2 / sum w
};

BrierResult brier_ipcw(std::span<const HorizonLabel> labels);

// Mean of per-week scores t = 0..T.
double integrated_brier(std::span<const double> per_week_scores);

// Subject-level input for the discrete concordance index.
struct ConcordanceSubject {
  double risk = 0.0;   // risk at the horizon, higher = earlier event expected
  int time = 0;        // t_final
  bool event = false;
  double weight = 1.0; // IPCW weight of the subject when it is the event member
};

struct ConcordanceResult {
  double cindex = 0.0;
  double comparable_weight = 0.0;
  std::size_t comparable_pairs = 0;
};

// Pairs (i, j) with i an event at t_i <= T and j still event-free through t_i
// (t_j > t_i, or t_j == t_i without an event). Concordant when
// risk_i > risk_j, ties 1/2; each pair weighted by weight_i^2.
ConcordanceResult cindex_discrete(std::span<const ConcordanceSubject> subjects,
                                  int T);

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;
  std::size_t events = 0;
  double mean_prediction = 0.0;
  double event_rate = 0.0;
};

std::vector<CalibrationBin> calibration_bins(std::span<const double> predictions,
                                             std::span<const std::uint8_t> labels,
                                             int bins = 15);

// Equal-width bins over [0, 1]; sum_b (n_b / n) |mean(pred)_b - mean(y)_b|.
double ece(std::span<const double> predictions, std::span<const std::uint8_t> labels,
           int bins = 15);

double brier_unweighted(std::span<const double> predictions,
                        std::span<const std::uint8_t> labels);

struct GroupDiagnostics {
  std::string group;
  std::size_t rows = 0;
  std::size_t events = 0;
  double auc = 0.0;  // NaN when a class is missing in the group
  double brier = 0.0;
  double ece = 0.0;
};

std::vector<GroupDiagnostics> by_group_diagnostics(
    std::span<const std::string> groups, std::span<const double> predictions,
    std::span<const std::uint8_t> labels, int bins = 15);

}  // namespace dtsurv
