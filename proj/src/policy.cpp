#include "dtsurv/policy.hpp"

#include <cmath>
#include <map>
#include <tuple>

#include "dtsurv/error.hpp"

namespace dtsurv {

std::string to_string(PolicyBranch branch) {
  return branch == PolicyBranch::kShock ? "shock" : "mechanism_aware";
}

std::string to_string(ScenarioStatus status) {
  return status == ScenarioStatus::kAnchored ? "anchored" : "hypothetical";
}

PolicyBranch parse_branch(const std::string& text) {
  if (text == "shock") return PolicyBranch::kShock;
  if (text == "mechanism_aware" || text == "mech") return PolicyBranch::kMechanismAware;
  throw Error(ErrorCode::kArgument, "unknown policy branch '" + text + "'");
}

ScenarioStatus parse_status(const std::string& text) {
  if (text == "anchored") return ScenarioStatus::kAnchored;
  if (text == "hypothetical") return ScenarioStatus::kHypothetical;
  throw Error(ErrorCode::kArgument, "unknown scenario status '" + text + "'");
}

void PolicyScenario::validate() const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kArgument, "scenario '" + scenario_id + "': " + what);
  };
  if (scenario_id.empty()) fail("empty scenario_id");
  if (!(delta_shock >= 0.0 && delta_shock < 1.0)) fail("delta_shock must be in [0, 1)");
  if (r_star < 1) fail("r_star must be >= 1");
  if (window_W < 1) fail("window_W must be >= 1");
  if (!(alpha_week0 >= 0.0) || !(alpha_week1 >= 0.0)) fail("alphas must be >= 0");
  click_multiplier(decay_type, 0, alpha_week0, alpha_week1);  // rejects unknown tags
}

double click_multiplier(const std::string& decay_type, int offset, double alpha_week0,
                        double alpha_week1) {
  if (decay_type == kDefaultDecay) {
    if (offset == 0) return 1.0 + alpha_week0;
    if (offset == 1) return 1.0 + alpha_week1;
    return 1.0;
  }
  if (decay_type == kHoldDecay) {
    if (offset == 0) return 1.0 + alpha_week0;
    if (offset >= 1) return 1.0 + alpha_week1;
    return 1.0;
  }
  throw Error(ErrorCode::kArgument, "unknown decay_type '" + decay_type + "'");
}

ActivationTable compute_activation(const PersonPeriodTable& table, int r_star, int window_W,
                                   bool exclusive_upper, bool retrigger) {
  if (r_star < 1 || window_W < 1) {
    throw Error(ErrorCode::kArgument, "r_star and window_W must be >= 1");
  }
  ActivationTable a;
  a.t_star.assign(table.size(), std::nullopt);
  a.active.assign(table.rows(), 0);
  a.window_offset.assign(table.rows(), -1);
  const int span = exclusive_upper ? window_W : window_W + 1;
  for (std::size_t i = 0; i < table.size(); ++i) {
    int start = -1;
    for (std::size_t r = table.begin_row(i); r < table.end_row(i); ++r) {
      const int t = table.week[r];
      const bool open = start >= 0 && t < start + span;
      if (!open && table.recency[r] >= r_star && (start < 0 || retrigger)) {
        start = t;
        if (!a.t_star[i]) a.t_star[i] = t;
      }
      if (start < 0 || t >= start + span) continue;
      if (table.event[r]) {
        ++a.event_rows_forced_inactive;
        continue;
      }
      a.active[r] = 1;
      a.window_offset[r] = t - start;
      ++a.active_rows;
    }
    if (a.t_star[i]) ++a.triggered;
  }
  return a;
}

ActivationTable compute_activation(const PersonPeriodTable& table,
                                   const PolicyScenario& scenario) {
  return compute_activation(table, scenario.r_star, scenario.window_W,
                            scenario.window_exclusive_upper, scenario.retrigger);
}

std::vector<double> shock_rescore(std::span<const double> baseline,
                                  const ActivationTable& activation, double delta) {
  if (baseline.size() != activation.active.size()) {
    throw Error(ErrorCode::kContract, "shock: hazards do not match the activation rows");
  }
  std::vector<double> out(baseline.begin(), baseline.end());
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (activation.active[r]) out[r] = baseline[r] * (1.0 - delta);
  }
  return out;
}

MechResult mech_rescore(const HazardModel& model, const PersonPeriodTable& table,
                        std::span<const double> baseline, const ActivationTable& activation,
                        const PolicyScenario& scenario) {
  if (baseline.size() != table.rows() || activation.active.size() != table.rows()) {
    throw Error(ErrorCode::kContract, "mech: inputs do not match the table rows");
  }
  MechResult m;
  m.total_clicks = table.total_clicks;
  m.recency = table.recency;
  m.streak = table.streak;
  m.active = table.active;

  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::size_t begin = table.begin_row(i);
    const std::size_t end = table.end_row(i);
    std::size_t first = end;
    for (std::size_t r = begin; r < end; ++r) {
      if (!activation.active[r]) continue;
      const double b = click_multiplier(scenario.decay_type, activation.window_offset[r],
                                        scenario.alpha_week0, scenario.alpha_week1);
      const double c = table.total_clicks[r] * b;
      if (!std::isfinite(c)) {
        throw Error(ErrorCode::kContract, "mech: non-finite counterfactual clicks");
      }
      if (c != table.total_clicks[r] && first == end) first = r;
      m.total_clicks[r] = c;
    }
    if (first == end) continue;
    const std::size_t n = end - begin;
    propagate_recency_streak(std::span<const double>(m.total_clicks).subspan(begin, n),
                             std::span<std::uint8_t>(m.active).subspan(begin, n),
                             std::span<std::int32_t>(m.recency).subspan(begin, n),
                             std::span<std::int32_t>(m.streak).subspan(begin, n), first - begin);
  }

  struct Counter {
    std::size_t changed = 0, outside = 0;
    double delta = 0.0;
  };
  Counter clicks, recency, streak, active;
  std::vector<std::size_t> changed_rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    bool any = false;
    auto track = [&](Counter& c, double now, double was) {
      if (now == was) return;
      ++c.changed;
      c.delta += now - was;
      if (!activation.active[r]) ++c.outside;
      any = true;
    };
    track(clicks, m.total_clicks[r], table.total_clicks[r]);
    track(recency, m.recency[r], table.recency[r]);
    track(streak, m.streak[r], table.streak[r]);
    track(active, m.active[r], table.active[r]);
    if (any) changed_rows.push_back(r);
  }
  auto overwrite = [](const char* name, const Counter& c) {
    return FeatureOverwrite{name, c.changed, c.outside,
                            c.changed ? c.delta / double(c.changed) : 0.0};
  };
  m.overwrites = {overwrite("total_clicks", clicks), overwrite("recency", recency),
                  overwrite("streak", streak), overwrite("active", active)};
  m.rows_changed = changed_rows.size();

  m.hazards.assign(baseline.begin(), baseline.end());
  if (!changed_rows.empty()) {
    DynamicColumns dyn{m.total_clicks, m.recency, m.streak, table.submitted};
    const auto h = predict_hazards(model, table, dyn, changed_rows);
    double sum = 0.0;
    for (std::size_t k = 0; k < changed_rows.size(); ++k) {
      m.hazards[changed_rows[k]] = h[k];
      sum += h[k] - baseline[changed_rows[k]];
    }
    m.mean_hazard_delta_changed = sum / double(changed_rows.size());
  }
  return m;
}

double ScenarioContrast::delta_at(int t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= delta.size()) {
    throw Error(ErrorCode::kArgument, "week " + std::to_string(t) + " outside the contrast");
  }
  return delta[static_cast<std::size_t>(t)];
}

std::vector<double> mean_survival(const PersonPeriodTable& table, std::span<const double> hazards,
                                  int T_max) {
  if (table.size() == 0) throw Error(ErrorCode::kEmptyInput, "mean survival of no enrollments");
  const auto surv = survival_by_row(table, hazards);
  std::vector<double> out(static_cast<std::size_t>(T_max) + 1, 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (int t = 0; t <= T_max; ++t) out[static_cast<std::size_t>(t)] += survival_at(table, surv, i, t);
  }
  for (double& v : out) v /= double(table.size());
  return out;
}

ScenarioContrast scenario_contrast(const PersonPeriodTable& table,
                                   std::span<const double> baseline,
                                   std::span<const double> regime, int T_max,
                                   std::string scenario_id) {
  if (baseline.size() != table.rows() || regime.size() != table.rows()) {
    throw Error(ErrorCode::kContract, "contrast: regimes scored on different row sets");
  }
  ScenarioContrast c;
  c.scenario_id = std::move(scenario_id);
  c.s_baseline = mean_survival(table, baseline, T_max);
  c.s_policy = mean_survival(table, regime, T_max);
  c.delta.resize(c.s_baseline.size());
  for (std::size_t t = 0; t < c.delta.size(); ++t) c.delta[t] = c.s_policy[t] - c.s_baseline[t];
  return c;
}

double mean_hazard_delta_changed(std::span<const double> baseline,
                                 std::span<const double> regime, std::size_t* changed) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < baseline.size(); ++r) {
    if (regime[r] != baseline[r]) {
      sum += regime[r] - baseline[r];
      ++n;
    }
  }
  if (changed) *changed = n;
  return n ? sum / double(n) : 0.0;
}

std::size_t GridSpec::size() const {
  return r_star.size() * window_W.size() * decay_type.size() * alpha_week0.size() *
         alpha_week1.size() * delta_shock.size();
}

std::vector<GridRow> sensitivity_grid(const HazardModel& model, const PersonPeriodTable& table,
                                      std::span<const double> baseline, const GridSpec& spec,
                                      int T_max, bool window_exclusive_upper) {
  if (spec.size() == 0) throw Error(ErrorCode::kArgument, "empty sensitivity grid");
  // Activations depend on (r*, W), shock contrasts on (r*, W, delta) and mech
  // contrasts on (r*, W, decay, alpha0, alpha1); each is computed once.
  std::map<std::pair<int, int>, ActivationTable> activations;
  std::map<std::tuple<int, int, double>, ScenarioContrast> shocks;
  std::map<std::tuple<int, int, std::string, double, double>, std::pair<ScenarioContrast, std::size_t>>
      mechs;

  std::vector<GridRow> rows;
  rows.reserve(spec.size());
  std::size_t id = 0;
  for (int r : spec.r_star) {
    for (int W : spec.window_W) {
      auto [ait, fresh] = activations.try_emplace({r, W});
      if (fresh) ait->second = compute_activation(table, r, W, window_exclusive_upper, false);
      const ActivationTable& act = ait->second;
      for (const auto& decay : spec.decay_type) {
        for (double a0 : spec.alpha_week0) {
          for (double a1 : spec.alpha_week1) {
            for (double d : spec.delta_shock) {
              GridRow row;
              row.config_id = id++;
              row.r_star = r;
              row.window_W = W;
              row.decay_type = decay;
              row.alpha_week0 = a0;
              row.alpha_week1 = a1;
              row.delta_shock = d;
              row.triggered = act.triggered;
              row.active_rows = act.active_rows;

              auto sk = std::make_tuple(r, W, d);
              auto sit = shocks.find(sk);
              if (sit == shocks.end()) {
                const auto h1 = shock_rescore(baseline, act, d);
                sit = shocks.emplace(sk, scenario_contrast(table, baseline, h1, T_max)).first;
              }
              row.shock = sit->second;
              row.shock.scenario_id = "grid_" + std::to_string(row.config_id) + "_shock";

              auto mk = std::make_tuple(r, W, decay, a0, a1);
              auto mit = mechs.find(mk);
              if (mit == mechs.end()) {
                PolicyScenario sc;
                sc.scenario_id = "grid";
                sc.branch = PolicyBranch::kMechanismAware;
                sc.r_star = r;
                sc.window_W = W;
                sc.alpha_week0 = a0;
                sc.alpha_week1 = a1;
                sc.decay_type = decay;
                sc.window_exclusive_upper = window_exclusive_upper;
                sc.validate();
                const auto m = mech_rescore(model, table, baseline, act, sc);
                mit = mechs.emplace(mk, std::make_pair(
                                            scenario_contrast(table, baseline, m.hazards, T_max),
                                            m.rows_changed))
                          .first;
              }
              row.mech = mit->second.first;
              row.mech.scenario_id = "grid_" + std::to_string(row.config_id) + "_mech";
              row.mech_rows_changed = mit->second.second;
              rows.push_back(std::move(row));
            }
          }
        }
      }
    }
  }
  return rows;
}

}  // namespace dtsurv
