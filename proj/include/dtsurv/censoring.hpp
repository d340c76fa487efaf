#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtsurv/hazard.hpp"
#include "dtsurv/splitting.hpp"

namespace dtsurv {

// Censoring-process labels: the terminal week of a non-event enrollment
// carries the censoring event; event enrollments contribute risk-set rows
// only (censored for the censoring process at t_event).
std::vector<std::uint8_t> censoring_labels(const PersonPeriodTable& table);

struct CensoringModel {
  HazardModel model;
};

CensoringModel fit_censoring(const PersonPeriodTable& table,
                             std::span<const std::size_t> rows,
                             std::span<const int> row_fold,
                             const HazardOptions& options);

// Row-conditional censoring survival G_it = P(C_i >= t | X) =
// prod_{k<t} (1 - g_ik); G_i0 = 1. One value per table row.
std::vector<double> censoring_survival_by_row(const PersonPeriodTable& table,
                                              std::span<const double> censoring_hazards);

// Test-marginal curve G(t), t = 0..max_week: mean over all enrollments of
// prod_{k<t, k<=t_final_i} (1 - g_ik). Non-increasing, G(0) = 1.
std::vector<double> marginal_censoring_survival(
    const PersonPeriodTable& table, std::span<const double> censoring_hazards,
    int max_week);

struct IpcwWeight {
  double weight = 1.0;
  bool floored = false;  // G < g_min
  bool capped = false;   // 1 / max(G, g_min) >= cap
};

// w = min(1 / max(G, g_min), cap).
IpcwWeight ipcw_weight(double g, double g_min, double cap);

struct WeightSummary {
  std::size_t n = 0;
  std::size_t floored = 0;
  std::size_t capped = 0;
  double capped_share() const { return n == 0 ? 0.0 : double(capped) / double(n); }
};

std::vector<double> ipcw_weights(std::span<const double> g, double g_min,
                                 double cap, WeightSummary* summary = nullptr);

struct HorizonConfig {
  int T_policy = 18;
  int T_eval_policy = 38;
  int T_eval_metrics = -1;  // computed
  double g_min = 0.05;
  double weight_cap = 20.0;
};

// T_eval_metrics = max{t <= T_eval_policy : G(t) >= g_min} over the supplied
// curve (indexed by week). Throws kDegenerateSupport when G(0) < g_min.
HorizonConfig compute_horizons(std::span<const double> marginal_g, double g_min,
                               int T_policy, int T_eval_policy,
                               double weight_cap = 20.0);

enum class AnchorVariant { kLastObs, kLastObsMinus1, kLastObsMinus2 };

AnchorVariant parse_anchor_variant(const std::string& name);
std::string to_string(AnchorVariant variant);
int anchor_trim(AnchorVariant variant);

// Re-anchors non-event enrollments at max(t_last_obs - trim, 0) and drops the
// trimmed rows. Event enrollments are unchanged.
PersonPeriodTable apply_anchor(const PersonPeriodTable& table, AnchorVariant variant);

struct AnchorDiagnostics {
  std::string variant;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t test_censoring_events = 0;
  double censoring_auc_test = 0.0;  // NaN when undefined
  double capped_share_test = 0.0;
  double floored_share_test = 0.0;
  double g_at_T_policy = 0.0;
  int T_eval_metrics = -1;
};

// Refits the censoring model on the re-anchored train rows and reports test
// diagnostics for that anchor.
AnchorDiagnostics anchor_sensitivity(const PersonPeriodTable& table,
                                     std::span<const SplitAssignment> assignments,
                                     AnchorVariant variant,
                                     const HazardOptions& options,
                                     const HorizonConfig& horizons);

}  // namespace dtsurv
