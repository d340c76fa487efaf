#include "dtsurv/censoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtsurv/error.hpp"
#include "dtsurv/kernels.hpp"
#include "dtsurv/metrics.hpp"

namespace dtsurv {

std::vector<std::uint8_t> censoring_labels(const PersonPeriodTable& table) {
  std::vector<std::uint8_t> y(table.rows(), 0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table.enrollments[i].event && table.end_row(i) > table.begin_row(i)) {
      y[table.end_row(i) - 1] = 1;
    }
  }
  return y;
}

CensoringModel fit_censoring(const PersonPeriodTable& table, std::span<const std::size_t> rows,
                             std::span<const int> row_fold, const HazardOptions& options) {
  const auto labels = censoring_labels(table);
  bool any = false;
  for (auto r : rows) any = any || labels[r];
  CensoringModel out;
  if (!any) {
    warn("censoring: no censoring events in the training rows; G is identically 1");
    out.model.zero_hazard = true;
    out.model.lambda = options.solver.lambda;
    return out;
  }
  out.model = fit_calibrated_hazard(table, rows, labels, row_fold, options);
  return out;
}

std::vector<double> censoring_survival_by_row(const PersonPeriodTable& table,
                                              std::span<const double> censoring_hazards) {
  if (censoring_hazards.size() != table.rows()) {
    throw Error(ErrorCode::kContract, "censoring hazards do not match the table rows");
  }
  std::vector<double> g(table.rows());
  for (std::size_t i = 0; i < table.size(); ++i) {
    double s = 1.0;
    for (std::size_t r = table.begin_row(i); r < table.end_row(i); ++r) {
      g[r] = s;
      s *= 1.0 - std::min(censoring_hazards[r], kernels::kMaxHazard);
    }
  }
  return g;
}

std::vector<double> marginal_censoring_survival(const PersonPeriodTable& table,
                                                std::span<const double> censoring_hazards,
                                                int max_week) {
  if (table.size() == 0) throw Error(ErrorCode::kEmptyInput, "no enrollments for G(t)");
  if (max_week < 0) throw Error(ErrorCode::kArgument, "max_week must be >= 0");
  const std::size_t T = static_cast<std::size_t>(max_week);
  std::vector<double> sum(T + 1, 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::size_t begin = table.begin_row(i);
    const std::size_t len = table.end_row(i) - begin;
    double s = 1.0;
    for (std::size_t t = 0; t <= T; ++t) {
      sum[t] += s;
      if (t < len) s *= 1.0 - std::min(censoring_hazards[begin + t], kernels::kMaxHazard);
    }
  }
  for (double& v : sum) v /= static_cast<double>(table.size());
  return sum;
}

IpcwWeight ipcw_weight(double g, double g_min, double cap) {
  IpcwWeight w;
  w.floored = g < g_min;
  const double raw = 1.0 / std::max(g, g_min);
  w.capped = raw >= cap;
  w.weight = std::min(raw, cap);
  return w;
}

std::vector<double> ipcw_weights(std::span<const double> g, double g_min, double cap,
                                 WeightSummary* summary) {
  std::vector<double> out(g.size());
  WeightSummary s;
  s.n = g.size();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const IpcwWeight w = ipcw_weight(g[k], g_min, cap);
    out[k] = w.weight;
    s.floored += w.floored;
    s.capped += w.capped;
  }
  if (summary) *summary = s;
  return out;
}

HorizonConfig compute_horizons(std::span<const double> marginal_g, double g_min, int T_policy,
                               int T_eval_policy, double weight_cap) {
  if (!(g_min > 0.0 && g_min < 1.0)) throw Error(ErrorCode::kArgument, "g_min must be in (0, 1)");
  if (marginal_g.empty()) throw Error(ErrorCode::kEmptyInput, "empty G curve");
  if (marginal_g[0] < g_min) {
    throw Error(ErrorCode::kDegenerateSupport, "G(0) is below g_min; no valid horizon");
  }
  HorizonConfig h;
  h.T_policy = T_policy;
  h.T_eval_policy = T_eval_policy;
  h.g_min = g_min;
  h.weight_cap = weight_cap;
  const int last = std::min<int>(T_eval_policy, static_cast<int>(marginal_g.size()) - 1);
  h.T_eval_metrics = 0;
  for (int t = 0; t <= last; ++t) {
    if (marginal_g[static_cast<std::size_t>(t)] >= g_min) h.T_eval_metrics = t;
  }
  if (h.T_eval_metrics < T_policy) {
    warn("horizons: T_eval_metrics=" + std::to_string(h.T_eval_metrics) +
         " falls below T_policy=" + std::to_string(T_policy));
  }
  return h;
}

AnchorVariant parse_anchor_variant(const std::string& name) {
  if (name == "last_obs" || name == "current") return AnchorVariant::kLastObs;
  if (name == "last_obs_minus_1" || name == "trim1") return AnchorVariant::kLastObsMinus1;
  if (name == "last_obs_minus_2" || name == "trim2") return AnchorVariant::kLastObsMinus2;
  throw Error(ErrorCode::kArgument, "unknown anchor variant '" + name + "'");
}

std::string to_string(AnchorVariant variant) {
  switch (variant) {
    case AnchorVariant::kLastObs: return "last_obs";
    case AnchorVariant::kLastObsMinus1: return "last_obs_minus_1";
    case AnchorVariant::kLastObsMinus2: return "last_obs_minus_2";
  }
  return {};
}

int anchor_trim(AnchorVariant variant) {
  switch (variant) {
    case AnchorVariant::kLastObs: return 0;
    case AnchorVariant::kLastObsMinus1: return 1;
    case AnchorVariant::kLastObsMinus2: return 2;
  }
  return 0;
}

PersonPeriodTable apply_anchor(const PersonPeriodTable& table, AnchorVariant variant) {
  const int trim = anchor_trim(variant);
  if (trim == 0) return table;
  PersonPeriodTable out;
  std::vector<PersonPeriodRow> rows;
  for (std::size_t i = 0; i < table.size(); ++i) {
    Enrollment e = table.enrollments[i];
    if (!e.event) {
      e.t_final = std::max(e.t_final - trim, 0);
      e.t_last_obs = e.t_final;
    }
    rows.clear();
    const std::size_t begin = table.begin_row(i);
    const std::size_t keep = std::min<std::size_t>(table.end_row(i) - begin,
                                                   static_cast<std::size_t>(e.t_final) + 1);
    for (std::size_t r = begin; r < begin + keep; ++r) {
      PersonPeriodRow row;
      row.t = table.week[r];
      row.total_clicks = table.total_clicks[r];
      row.recency = table.recency[r];
      row.streak = table.streak[r];
      row.submitted_this_week = table.submitted[r] != 0;
      row.active = table.active[r] != 0;
      row.event = table.event[r] != 0;
      rows.push_back(row);
    }
    out.append(e, rows);
  }
  return out;
}

AnchorDiagnostics anchor_sensitivity(const PersonPeriodTable& table,
                                     std::span<const SplitAssignment> assignments,
                                     AnchorVariant variant, const HazardOptions& options,
                                     const HorizonConfig& horizons) {
  const PersonPeriodTable anchored = apply_anchor(table, variant);
  const TableSplit split = resolve_split(anchored, assignments);
  const CensoringModel cm = fit_censoring(anchored, split.train_rows, split.row_fold, options);

  const PersonPeriodTable test = subset(anchored, split.test_enrollments);
  const auto g_hazard = predict_hazards(cm.model, test);
  const auto labels = censoring_labels(test);
  const auto g_rows = censoring_survival_by_row(test, g_hazard);

  AnchorDiagnostics d;
  d.variant = to_string(variant);
  d.train_rows = split.train_rows.size();
  d.test_rows = test.rows();
  for (auto v : labels) d.test_censoring_events += v;
  try {
    d.censoring_auc_test = auc(labels, g_hazard);
  } catch (const Error&) {
    d.censoring_auc_test = std::numeric_limits<double>::quiet_NaN();
  }

  const auto marginal = marginal_censoring_survival(test, g_hazard, horizons.T_eval_policy);
  d.g_at_T_policy = marginal[static_cast<std::size_t>(
      std::clamp(horizons.T_policy, 0, horizons.T_eval_policy))];
  try {
    d.T_eval_metrics = compute_horizons(marginal, horizons.g_min, horizons.T_policy,
                                        horizons.T_eval_policy, horizons.weight_cap)
                           .T_eval_metrics;
  } catch (const Error&) {
    d.T_eval_metrics = -1;
  }

  // Capped share among test subjects carrying a horizon weight at the
  // metric horizon (events by T at their event week, event-free through T at T).
  const int T = horizons.T_eval_metrics >= 0 ? horizons.T_eval_metrics : d.T_eval_metrics;
  WeightSummary ws;
  for (std::size_t i = 0; i < test.size() && T >= 0; ++i) {
    const Enrollment& e = test.enrollments[i];
    int at = -1;
    if (e.event && *e.t_event <= T) {
      at = *e.t_event;
    } else if (e.t_final >= T) {
      at = T;
    }
    if (at < 0) continue;
    const IpcwWeight w = ipcw_weight(g_rows[test.begin_row(i) + static_cast<std::size_t>(at)],
                                     horizons.g_min, horizons.weight_cap);
    ++ws.n;
    ws.capped += w.capped;
    ws.floored += w.floored;
  }
  d.capped_share_test = ws.capped_share();
  d.floored_share_test = ws.n == 0 ? 0.0 : double(ws.floored) / double(ws.n);
  return d;
}

}  // namespace dtsurv
