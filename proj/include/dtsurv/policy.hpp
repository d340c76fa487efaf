#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtsurv/hazard.hpp"
#include "dtsurv/person_period.hpp"

namespace dtsurv {

enum class PolicyBranch { kShock, kMechanismAware };
enum class ScenarioStatus { kAnchored, kHypothetical };

std::string to_string(PolicyBranch branch);
std::string to_string(ScenarioStatus status);
PolicyBranch parse_branch(const std::string& text);
ScenarioStatus parse_status(const std::string& text);

inline constexpr const char* kDefaultDecay = "kb2023_step_2w";
inline constexpr const char* kHoldDecay = "step_hold_week1";

struct PolicyScenario {
  std::string scenario_id;
  std::string label;
  PolicyBranch branch = PolicyBranch::kShock;
  ScenarioStatus status = ScenarioStatus::kHypothetical;
  int r_star = 1;
  int window_W = 2;
  double delta_shock = 0.0;
  double alpha_week0 = 0.35;
  double alpha_week1 = 0.10;
  std::string decay_type = kDefaultDecay;
  bool window_exclusive_upper = true;
  bool retrigger = false;

  // Throws kArgument on a broken invariant or an unknown decay tag.
  void validate() const;
};

// Click multiplier b at `offset` weeks into the window.
//   kb2023_step_2w : 1+alpha0 at offset 0, 1+alpha1 at offset 1, 1 after.
//   step_hold_week1: 1+alpha0 at offset 0, 1+alpha1 for every later offset.
double click_multiplier(const std::string& decay_type, int offset,
                        double alpha_week0, double alpha_week1);

struct ActivationTable {
  std::vector<std::optional<int>> t_star;  // per enrollment, first trigger week
  std::vector<std::uint8_t> active;        // per row
  std::vector<std::int32_t> window_offset; // per row, t - window start, -1 outside
  std::size_t triggered = 0;
  std::size_t active_rows = 0;
  std::size_t event_rows_forced_inactive = 0;
};

// t* = min{t : recency >= r*}; active on [t*, t*+W) (closed upper bound when
// exclusive_upper is false). Event rows are never active. With `retrigger`,
// later recency crossings after a window closes open new windows.
ActivationTable compute_activation(const PersonPeriodTable& table, int r_star,
                                   int window_W, bool exclusive_upper = true,
                                   bool retrigger = false);
ActivationTable compute_activation(const PersonPeriodTable& table,
                                   const PolicyScenario& scenario);

// h1 = h0 * (1 - delta) on active rows.
std::vector<double> shock_rescore(std::span<const double> baseline,
                                  const ActivationTable& activation, double delta);

struct FeatureOverwrite {
  std::string feature;
  std::size_t rows_changed = 0;
  std::size_t rows_changed_outside_window = 0;
  double mean_delta = 0.0;  // over changed rows
};

struct MechResult {
  std::vector<double> hazards;
  std::size_t rows_changed = 0;  // any covariate changed
  std::vector<FeatureOverwrite> overwrites;
  double mean_hazard_delta_changed = 0.0;
  std::vector<double> total_clicks;  // counterfactual clicks, per row
  std::vector<std::int32_t> recency;
  std::vector<std::int32_t> streak;
  std::vector<std::uint8_t> active;
};

// Mechanism-aware operator (clicks_plus_stateful_recency_streak): clicks on
// window rows are multiplied by the decay schedule, activity is recomputed
// and recency/streak re-propagated to t_final from the first modified week,
// then modified rows are rescored through the fitted model.
MechResult mech_rescore(const HazardModel& model, const PersonPeriodTable& table,
                        std::span<const double> baseline,
                        const ActivationTable& activation,
                        const PolicyScenario& scenario);

struct ScenarioContrast {
  std::string scenario_id;
  std::vector<double> s_baseline;  // mean survival by week, t = 0..T_max
  std::vector<double> s_policy;
  std::vector<double> delta;

  double delta_at(int t) const;
};

// Fixed denominator N = all enrollments; each curve is held at its last
// value after t_final.
std::vector<double> mean_survival(const PersonPeriodTable& table,
                                  std::span<const double> hazards, int T_max);

ScenarioContrast scenario_contrast(const PersonPeriodTable& table,
                                   std::span<const double> baseline,
                                   std::span<const double> regime, int T_max,
                                   std::string scenario_id = {});

// Mean hazard change on rows where the two hazard vectors differ.
double mean_hazard_delta_changed(std::span<const double> baseline,
                                 std::span<const double> regime,
                                 std::size_t* changed = nullptr);

struct GridSpec {
  std::vector<int> r_star{1, 2};
  std::vector<int> window_W{2, 3};
  std::vector<std::string> decay_type{kDefaultDecay, kHoldDecay};
  std::vector<double> alpha_week0{0.20, 0.35, 0.50};
  std::vector<double> alpha_week1{0.05, 0.10, 0.20};
  std::vector<double> delta_shock{0.08, 0.20, 0.60};

  std::size_t size() const;
};

struct GridRow {
  std::size_t config_id = 0;
  int r_star = 0;
  int window_W = 0;
  std::string decay_type;
  double alpha_week0 = 0.0;
  double alpha_week1 = 0.0;
  double delta_shock = 0.0;
  std::size_t triggered = 0;
  std::size_t active_rows = 0;
  std::size_t mech_rows_changed = 0;
  ScenarioContrast shock;
  ScenarioContrast mech;
};

// Enumerates r* x W x decay x alpha0 x alpha1 x delta in that nesting order.
// Rows come back in config order regardless of threading.
std::vector<GridRow> sensitivity_grid(const HazardModel& model,
                                      const PersonPeriodTable& table,
                                      std::span<const double> baseline,
                                      const GridSpec& spec, int T_max,
                                      bool window_exclusive_upper = true);

}  // namespace dtsurv
