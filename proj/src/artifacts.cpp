#include "dtsurv/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <openssl/evp.h>

#include <json.hpp>

#include "dtsurv/csv.hpp"
#include "dtsurv/error.hpp"
#include "dtsurv/evaluation.hpp"
#include "dtsurv/metrics.hpp"
#include "dtsurv/model_io.hpp"
#include "dtsurv/rng.hpp"

namespace dtsurv {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return csv::format_double(v); }
std::string num(std::int64_t v) { return csv::format_int(v); }
std::string num(std::size_t v) { return csv::format_int(static_cast<std::int64_t>(v)); }
std::string num(int v) { return csv::format_int(v); }
std::string flag(bool v) { return v ? "true" : "false"; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double auc_or_nan(std::span<const std::uint8_t> y, std::span<const double> s) {
  try {
    return auc(y, s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefinedMetric) throw;
    return kNaN;
  }
}

std::vector<std::uint8_t> labels_at(const PersonPeriodTable& table,
                                    std::span<const std::size_t> rows) {
  std::vector<std::uint8_t> y(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) y[k] = table.event[rows[k]];
  return y;
}

std::pair<std::string, std::string> parse_run(const std::string& run) {
  const auto comma = run.find(',');
  if (comma == std::string::npos) {
    throw Error(ErrorCode::kArgument, "run '" + run + "' is not MODULE,PRESENTATION");
  }
  return {csv::trim(run.substr(0, comma)), csv::trim(run.substr(comma + 1))};
}

std::string static_level(const EnrollmentKey& key, const StaticCovariates& s,
                         const std::string& column) {
  if (column == "gender") return s.gender;
  if (column == "highest_education") return s.highest_education;
  if (column == "age_band") return s.age_band;
  if (column == "code_module") return key.code_module;
  if (column == "code_presentation") return key.code_presentation;
  throw Error(ErrorCode::kArgument, "group column '" + column + "' is not a categorical static");
}

// Runs one pipeline stage; failures keep their code and gain the stage name.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + name + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIo, "stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kContract, "stage " + name + ": " + e.what());
  }
}

}  // namespace

ArtifactSink::ArtifactSink(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path ArtifactSink::path(const std::string& file) {
  fs::path p = dir_ / file;
  if (std::find(files_.begin(), files_.end(), p) != files_.end()) {
    throw Error(ErrorCode::kContract, "artifact " + p.string() + " registered twice");
  }
  files_.push_back(p);
  return p;
}

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string() + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorCode::kIo, "sha256 init failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[md[k] >> 4]);
    out.push_back(hex[md[k] & 15]);
  }
  return out;
}

// ---- summaries of the early stages ----

void export_cohort_summary(ArtifactSink& sink, const Backbone& backbone,
                           const PersonPeriodTable& table) {
  std::size_t events = 0;
  for (const auto& e : backbone.enrollments) events += e.event;
  csv::Writer w(sink.path("table_cohort_summary.csv"));
  w.row({"quantity", "value"});
  w.row({"enrollments", num(backbone.enrollments.size())});
  w.row({"unique_students", num(backbone.unique_students)});
  w.row({"events", num(events)});
  w.row({"censored", num(backbone.enrollments.size() - events)});
  w.row({"withdrawn_without_date", num(backbone.withdrawn_without_date)});
  w.row({"duplicates_dropped", num(backbone.duplicates_dropped)});
  w.row({"orphan_rows", num(backbone.orphan_rows)});
  w.row({"person_period_rows", num(table.rows())});
  w.close();
}

void export_split_summary(ArtifactSink& sink, const PersonPeriodTable& table,
                          const TableSplit& split, const std::vector<int>& bucket_edges) {
  csv::Writer w(sink.path("table_split_summary.csv"));
  w.row({"partition", "enrollments", "rows", "events"});
  auto write = [&](const char* name, const std::vector<std::size_t>& enr,
                   const std::vector<std::size_t>& rows) {
    std::size_t ev = 0;
    for (auto i : enr) ev += table.enrollments[i].event;
    w.row({name, num(enr.size()), num(rows.size()), num(ev)});
  };
  write("train", split.train_enrollments, split.train_rows);
  write("test", split.test_enrollments, split.test_rows);
  w.close();

  csv::Writer e(sink.path("table_split_bucket_edges.csv"));
  e.row({"edge_index", "week"});
  for (std::size_t k = 0; k < bucket_edges.size(); ++k) e.row({num(k), num(bucket_edges[k])});
  e.close();
}

void export_model_summary(ArtifactSink& sink, const std::string& file, const HazardModel& m) {
  csv::Writer w(sink.path(file));
  w.row({"term", "value"});
  w.row({"(intercept)", num(m.intercept)});
  if (!m.zero_hazard) {
    const auto names = m.codec.coefficient_names();
    for (std::size_t k = 0; k < names.size(); ++k) w.row({names[k], num(m.coefficients[k])});
  }
  w.row({"(calibration_a)", num(m.calibration.a)});
  w.row({"(calibration_b)", num(m.calibration.b)});
  w.row({"(lambda)", num(m.lambda)});
  w.row({"(weight_positive)", num(m.weight_positive)});
  w.row({"(weight_negative)", num(m.weight_negative)});
  w.row({"(iterations)", num(m.iterations)});
  w.row({"(gradient_norm)", num(m.gradient_norm)});
  w.row({"(calibration_folds_used)", num(m.calibration_folds_used)});
  w.close();
}

SplitResult split_stage(const std::vector<Enrollment>& enrollments, const RunConfig& config) {
  SplitResult split;
  if (config.split.holdout_run) {
    const auto [module, presentation] = parse_run(*config.split.holdout_run);
    split = holdout_run_split(enrollments, module, presentation, config.split.q);
  } else {
    split = stratified_split(enrollments, {config.split.q, config.split.test_size, config.seed});
  }
  grouped_kfold(split.assignments, config.calibration_k, config.seed);
  return split;
}

// ---- model stages ----

HazardOptions hazard_options(const RunConfig& config, AblationVariant variant) {
  HazardOptions o;
  o.solver.lambda = config.model.lambda;
  o.solver.max_iter = config.model.max_iter;
  o.solver.tolerance = config.model.tolerance;
  o.features = features_for(variant);
  o.seed = config.seed;
  return o;
}

HazardModel train_stage(const PersonPeriodTable& table, const TableSplit& split,
                        const RunConfig& config, AblationVariant variant) {
  return fit_calibrated_hazard(table, split.train_rows, event_labels(table), split.row_fold,
                               hazard_options(config, variant));
}

CensoringModel censoring_stage(const PersonPeriodTable& table, const TableSplit& split,
                               const RunConfig& config) {
  return fit_censoring(table, split.train_rows, split.row_fold,
                       hazard_options(config, AblationVariant::kFull));
}

ScoredTest score_test(const PersonPeriodTable& table, const TableSplit& split,
                      const HazardModel& hazard, const CensoringModel& censoring,
                      const RunConfig& config) {
  ScoredTest s;
  s.test = subset(table, split.test_enrollments);
  if (s.test.size() == 0) throw Error(ErrorCode::kEmptyInput, "test partition is empty");
  s.hazards = predict_hazards(hazard, s.test);
  s.survival = survival_by_row(s.test, s.hazards);
  s.censoring_hazards = predict_hazards(censoring.model, s.test);
  s.g_rows = censoring_survival_by_row(s.test, s.censoring_hazards);
  s.marginal_g = marginal_censoring_survival(s.test, s.censoring_hazards,
                                             config.horizons.T_eval_policy);
  s.horizons = compute_horizons(s.marginal_g, config.horizons.g_min, config.horizons.T_policy,
                                config.horizons.T_eval_policy, config.horizons.weight_cap);
  return s;
}

void export_horizon_tables(ArtifactSink& sink, const ScoredTest& scored) {
  const auto& test = scored.test;
  const auto labels = censoring_labels(test);
  {
    csv::Writer w(sink.path("table_censoring_G_by_week.csv"));
    w.row({"week", "G_marginal", "enrollments_observed", "censoring_events", "primary_events"});
    for (std::size_t t = 0; t < scored.marginal_g.size(); ++t) {
      std::size_t observed = 0, cens = 0, ev = 0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        const Enrollment& e = test.enrollments[i];
        if (static_cast<std::size_t>(e.t_final) < t) continue;
        ++observed;
        if (static_cast<std::size_t>(e.t_final) == t) {
          cens += labels[test.end_row(i) - 1];
          ev += e.event;
        }
      }
      w.row({num(t), num(scored.marginal_g[t]), num(observed), num(cens), num(ev)});
    }
    w.close();
  }
  {
    const auto& h = scored.horizons;
    auto g = [&](int t) { return num(scored.marginal_g[static_cast<std::size_t>(t)]); };
    WeightSummary ws;
    ipcw_weights(scored.g_rows, h.g_min, h.weight_cap, &ws);
    csv::Writer w(sink.path("table_horizon_diagnostics.csv"));
    w.row({"quantity", "week", "value", "definition"});
    w.row({"T_policy", num(h.T_policy), g(h.T_policy), "substantive reporting week; value is G(T)"});
    w.row({"T_eval_metrics", num(h.T_eval_metrics), g(h.T_eval_metrics),
           "max t <= T_eval_policy with G(t) >= g_min; value is G(T)"});
    w.row({"T_eval_policy", num(h.T_eval_policy), g(h.T_eval_policy),
           "raw trajectory support; value is G(T)"});
    w.row({"g_min", "", num(h.g_min), "floor on G inside weights"});
    w.row({"weight_cap", "", num(h.weight_cap), "ceiling on IPCW weights"});
    w.row({"row_weight_capped_share", "", num(ws.capped_share()),
           "test rows whose weight reaches the cap"});
    w.row({"row_weight_floored_share", "", num(ws.n ? double(ws.floored) / double(ws.n) : 0.0),
           "test rows with G below g_min"});
    w.close();
  }
}

void export_anchor_sensitivity(ArtifactSink& sink, const PersonPeriodTable& table,
                               std::span<const SplitAssignment> assignments,
                               const RunConfig& config, const HorizonConfig& horizons) {
  csv::Writer w(sink.path("table_censoring_anchor_sensitivity.csv"));
  w.row({"anchor_variant", "train_rows", "test_rows", "test_censoring_events",
         "censoring_auc_test_rows", "capped_weight_share_test", "floored_share_test",
         "G_T_policy", "T_eval_metrics", "note"});
  for (auto v : {AnchorVariant::kLastObs, AnchorVariant::kLastObsMinus1,
                 AnchorVariant::kLastObsMinus2}) {
    const auto d = anchor_sensitivity(table, assignments, v,
                                      hazard_options(config, AblationVariant::kFull), horizons);
    w.row({d.variant, num(d.train_rows), num(d.test_rows), num(d.test_censoring_events),
           num(d.censoring_auc_test), num(d.capped_share_test), num(d.floored_share_test),
           num(d.g_at_T_policy), num(d.T_eval_metrics),
           "row-level censoring-hazard AUC; capped share over subjects weighted at T_eval_metrics"});
  }
  w.close();
}

// ---- evaluation ----

namespace {

void horizon_row(csv::Writer& w, const std::string& prefix_a, const std::string& prefix_b,
                 const HorizonMetrics& m) {
  w.row({prefix_a, prefix_b, num(m.T), num(m.brier.mean), num(m.brier.weight_normalized),
         num(m.ibs), num(m.ibs_weight_normalized), num(m.cindex), num(m.comparable_pairs),
         num(m.events_by_T)});
}

const std::vector<std::string> kHorizonHeader = {
    "brier_ipcw", "brier_ipcw_weight_normalized", "ibs_ipcw", "ibs_ipcw_weight_normalized",
    "cindex_discrete", "comparable_pairs", "events_by_T"};

std::vector<std::string> header_with(std::vector<std::string> head) {
  head.push_back("T");
  head.insert(head.end(), kHorizonHeader.begin(), kHorizonHeader.end());
  return head;
}

}  // namespace

void evaluate_stage(ArtifactSink& sink, const PersonPeriodTable& table, const TableSplit& split,
                    const HazardModel& hazard, const ScoredTest& scored,
                    const RunConfig& config, bool composite) {
  const auto& test = scored.test;
  const auto& h = scored.horizons;
  const auto train_h = predict_hazards(hazard, table, split.train_rows);
  const auto train_y = labels_at(table, split.train_rows);
  {
    csv::Writer w(sink.path("table_rq1_row_metrics.csv"));
    w.row({"partition", "rows", "events", "auc_row", "brier_row", "ece_15", "mean_hazard",
           "event_rate"});
    auto write = [&](const char* name, std::span<const double> p, std::span<const std::uint8_t> y) {
      double mp = 0.0, my = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        mp += p[k];
        my += y[k];
      }
      const double n = double(p.size());
      w.row({name, num(p.size()), num(static_cast<std::size_t>(my)), num(auc_or_nan(y, p)),
             num(brier_unweighted(p, y)), num(ece(p, y, 15)), num(mp / n), num(my / n)});
    };
    write("train", train_h, train_y);
    write("test", scored.hazards, test.event);
    w.close();
  }
  {
    const auto bins = calibration_bins(scored.hazards, test.event, 15);
    csv::Writer w(sink.path("table_calibration_bins_test.csv"));
    w.row({"bin", "lower", "upper", "rows", "events", "mean_prediction", "event_rate"});
    for (std::size_t b = 0; b < bins.size(); ++b) {
      w.row({num(b), num(bins[b].lower), num(bins[b].upper), num(bins[b].n), num(bins[b].events),
             num(bins[b].mean_prediction), num(bins[b].event_rate)});
    }
    w.close();
  }
  {
    const auto endpoint = primary_labels(test);
    csv::Writer w(sink.path("table_rq1_horizon_metrics.csv"));
    w.row(header_with({"horizon", "endpoint"}));
    horizon_row(w, "T_policy", "primary",
                evaluate_horizon(test, scored.survival, scored.g_rows, endpoint, h.T_policy,
                                 h.g_min, h.weight_cap));
    horizon_row(w, "T_eval_metrics", "primary",
                evaluate_horizon(test, scored.survival, scored.g_rows, endpoint, h.T_eval_metrics,
                                 h.g_min, h.weight_cap));
    w.close();
  }
  {
    std::vector<std::string> groups(test.rows());
    for (std::size_t r = 0; r < test.rows(); ++r) {
      const Enrollment& e = test.enrollment_of(r);
      groups[r] = static_level(e.key, e.statics, config.subgroup.column);
    }
    const auto diag = by_group_diagnostics(groups, scored.hazards, test.event, 15);
    csv::Writer w(sink.path("table_by_group_diagnostics.csv"));
    w.row({"group_column", "group", "rows", "events", "auc_row", "brier_row", "ece_15"});
    for (const auto& d : diag) {
      w.row({config.subgroup.column, d.group, num(d.rows), num(d.events), num(d.auc),
             num(d.brier), num(d.ece)});
    }
    w.close();
  }
  if (composite) {
    const auto rows = endpoint_sensitivity(test, scored.survival, scored.g_rows, h);
    csv::Writer w(sink.path("table_endpoint_sensitivity.csv"));
    auto head = header_with({"endpoint", "n_events", "horizon"});
    head.push_back("note");
    w.row(head);
    const std::string note = "same risk score; weights from the primary censoring model";
    for (const auto& r : rows) {
      for (const auto* m : {&r.at_T_policy, &r.at_T_eval_metrics}) {
        w.row({r.endpoint, num(r.n_events), m == &r.at_T_policy ? "T_policy" : "T_eval_metrics",
               num(m->T), num(m->brier.mean), num(m->brier.weight_normalized), num(m->ibs),
               num(m->ibs_weight_normalized), num(m->cindex), num(m->comparable_pairs),
               num(m->events_by_T), note});
      }
    }
    w.close();
  }
}

void ablation_stage(ArtifactSink& sink, const PersonPeriodTable& table, const TableSplit& split,
                    const ScoredTest& scored, const RunConfig& config) {
  const auto& test = scored.test;
  const auto& h = scored.horizons;
  const auto endpoint = primary_labels(test);
  csv::Writer w(sink.path("table_ablation.csv"));
  w.row(header_with({"variant", "auc_row_test"}));
  for (auto v : {AblationVariant::kFull, AblationVariant::kNoRecencyStreak,
                 AblationVariant::kNoActivity}) {
    std::vector<double> hz, surv;
    if (v == AblationVariant::kFull) {
      hz = scored.hazards;
      surv = scored.survival;
    } else {
      const HazardModel m = train_stage(table, split, config, v);
      hz = predict_hazards(m, test);
      surv = survival_by_row(test, hz);
    }
    const auto m = evaluate_horizon(test, surv, scored.g_rows, endpoint, h.T_eval_metrics,
                                    h.g_min, h.weight_cap);
    horizon_row(w, to_string(v), num(auc_or_nan(test.event, hz)), m);
  }
  w.close();
}

void holdout_run_stage(ArtifactSink& sink, const PersonPeriodTable& table,
                       const RunConfig& config) {
  csv::Writer w(sink.path("table_holdout_runs.csv"));
  w.row(header_with({"held_out_run", "train_enrollments", "test_enrollments", "auc_row_test"}));
  for (const auto& run : config.robustness.holdout_runs) {
    RunConfig c = config;
    c.split.holdout_run = run;
    const SplitResult sr = split_stage(table.enrollments, c);
    const TableSplit split = resolve_split(table, sr.assignments);
    const HazardModel hz = train_stage(table, split, c);
    const CensoringModel cm = censoring_stage(table, split, c);
    const ScoredTest s = score_test(table, split, hz, cm, c);
    const auto m = evaluate_horizon(s.test, s.survival, s.g_rows, primary_labels(s.test),
                                    s.horizons.T_eval_metrics, s.horizons.g_min,
                                    s.horizons.weight_cap);
    w.row({run, num(split.train_enrollments.size()), num(split.test_enrollments.size()),
           num(auc_or_nan(s.test.event, s.hazards)), num(m.T), num(m.brier.mean),
           num(m.brier.weight_normalized), num(m.ibs), num(m.ibs_weight_normalized),
           num(m.cindex), num(m.comparable_pairs), num(m.events_by_T)});
  }
  w.close();
}

// ---- policy ----

PolicyOutputs policy_stage(ArtifactSink& sink, const HazardModel& hazard,
                           const ScoredTest& scored, const RunConfig& config) {
  const auto& test = scored.test;
  const auto& h = scored.horizons;
  const int T_max = h.T_eval_policy;
  PolicyOutputs out;
  out.scenarios = config.policy.scenarios;
  for (const auto& sc : out.scenarios) {
    sc.validate();
    ActivationTable act = compute_activation(test, sc);
    std::vector<double> regime;
    MechResult mech;
    if (sc.branch == PolicyBranch::kShock) {
      regime = shock_rescore(scored.hazards, act, sc.delta_shock);
    } else {
      mech = mech_rescore(hazard, test, scored.hazards, act, sc);
      regime = mech.hazards;
    }
    out.contrasts.push_back(scenario_contrast(test, scored.hazards, regime, T_max, sc.scenario_id));
    out.activations.push_back(std::move(act));
    out.mech.push_back(std::move(mech));
    out.regime_hazards.push_back(std::move(regime));
  }

  const PolicyScenario* reference = nullptr;
  for (const auto& sc : out.scenarios) {
    if (sc.scenario_id == config.policy.reference_scenario) reference = &sc;
  }

  {
    const PolicyScenario& r = reference ? *reference : out.scenarios.front();
    csv::Writer w(sink.path("table_policy_spec.csv"));
    w.row({"parameter", "value", "description"});
    w.row({"trigger_rule", "recency >= r_star", "flag when no LMS engagement in the last r_star weeks"});
    w.row({"check_frequency", "weekly", "trigger evaluated on every person-period week"});
    w.row({"r_star", num(r.r_star), "trigger threshold in weeks"});
    w.row({"window_W", num(r.window_W), "active window length in weeks"});
    w.row({"window_exclusive_upper", flag(r.window_exclusive_upper), "window is [t*, t*+W)"});
    w.row({"retrigger", flag(r.retrigger), "later recency crossings open new windows"});
    w.row({"event_rows", "forced inactive", "the terminal event week is never treated"});
    w.row({"reference_scenario", config.policy.reference_scenario, "scenario used for headline contrasts"});
    w.row({"subgroup_scenario", config.subgroup.scenario, "scenario used for the gap analysis"});
    w.row({"T_policy", num(h.T_policy), "substantive reporting week"});
    w.row({"T_eval_policy", num(h.T_eval_policy), "trajectory support for Delta S"});
    w.row({"T_eval_metrics", num(h.T_eval_metrics), "IPCW-stable metric horizon"});
    w.row({"survival_average", "fixed denominator N", "curves held at their last value after t_final"});
    w.close();
  }
  {
    csv::Writer w(sink.path("table_policy_scenarios_main.csv"));
    w.row({"scenario_id", "label", "branch", "status", "delta_shock", "S_baseline_T_policy",
           "S_policy_T_policy", "delta_S_T_policy", "S_baseline_T_eval_policy",
           "S_policy_T_eval_policy", "delta_S_T_eval_policy", "rows_changed",
           "mean_hazard_delta_changed", "is_reference"});
    for (std::size_t k = 0; k < out.scenarios.size(); ++k) {
      const auto& sc = out.scenarios[k];
      const auto& c = out.contrasts[k];
      std::size_t changed = 0;
      const double mh = mean_hazard_delta_changed(scored.hazards, out.regime_hazards[k], &changed);
      const auto tp = static_cast<std::size_t>(h.T_policy);
      const auto te = static_cast<std::size_t>(h.T_eval_policy);
      w.row({sc.scenario_id, sc.label, to_string(sc.branch), to_string(sc.status),
             sc.branch == PolicyBranch::kShock ? num(sc.delta_shock) : "",
             num(c.s_baseline[tp]), num(c.s_policy[tp]), num(c.delta[tp]), num(c.s_baseline[te]),
             num(c.s_policy[te]), num(c.delta[te]), num(changed), num(mh),
             flag(sc.scenario_id == config.policy.reference_scenario)});
    }
    w.close();
  }
  {
    csv::Writer w(sink.path("table_policy_scenario_params.csv"));
    w.row({"scenario_id", "branch", "status", "r_star", "window_W", "window_exclusive_upper",
           "retrigger", "delta_shock", "alpha_week0", "alpha_week1", "decay_type"});
    for (const auto& sc : out.scenarios) {
      const bool shock = sc.branch == PolicyBranch::kShock;
      w.row({sc.scenario_id, to_string(sc.branch), to_string(sc.status), num(sc.r_star),
             num(sc.window_W), flag(sc.window_exclusive_upper), flag(sc.retrigger),
             shock ? num(sc.delta_shock) : "", shock ? "" : num(sc.alpha_week0),
             shock ? "" : num(sc.alpha_week1), shock ? "" : sc.decay_type});
    }
    w.close();
  }
  {
    csv::Writer w(sink.path("table_policy_deltaS_by_week_by_scenario.csv"));
    w.row({"scenario_id", "week", "S_baseline", "S_policy", "delta_S"});
    for (const auto& c : out.contrasts) {
      for (std::size_t t = 0; t < c.delta.size(); ++t) {
        w.row({c.scenario_id, num(t), num(c.s_baseline[t]), num(c.s_policy[t]), num(c.delta[t])});
      }
    }
    w.close();
  }
  {
    csv::Writer w(sink.path("table_policy_deltaS_at_horizons_by_scenario.csv"));
    w.row({"scenario_id", "horizon", "week", "S_baseline", "S_policy", "delta_S"});
    for (const auto& c : out.contrasts) {
      for (const auto& [name, t] : {std::pair<const char*, int>{"T_policy", h.T_policy},
                                    {"T_eval_metrics", h.T_eval_metrics},
                                    {"T_eval_policy", h.T_eval_policy}}) {
        const auto u = static_cast<std::size_t>(t);
        w.row({c.scenario_id, name, num(t), num(c.s_baseline[u]), num(c.s_policy[u]),
               num(c.delta[u])});
      }
    }
    w.close();
  }
  {
    csv::Writer w(sink.path("table_policy_horizons_dual.csv"));
    w.row({"horizon", "week", "role", "tail_convention"});
    const std::string tail = "fixed denominator N; survival held at last value after t_final";
    w.row({"T_policy", num(h.T_policy), "substantive Delta S and gap reporting", tail});
    w.row({"T_eval_metrics", num(h.T_eval_metrics),
           "IPCW metrics and subgroup gaps (last week with G >= g_min)", tail});
    w.row({"T_eval_policy", num(h.T_eval_policy), "Delta S trajectory support", tail});
    w.close();
  }
  {
    const PolicyScenario* mech = nullptr;
    for (const auto& sc : out.scenarios) {
      if (sc.branch == PolicyBranch::kMechanismAware && !mech) mech = &sc;
    }
    PolicyScenario def;
    const PolicyScenario& m = mech ? *mech : def;
    csv::Writer w(sink.path("table_policy_mech_operator_spec.csv"));
    w.row({"field", "value"});
    w.row({"channel_mode", "clicks_plus_stateful_recency_streak"});
    w.row({"timing", "window rows [t*, t*+W) after the first recency trigger"});
    w.row({"overwrite_rule", "total_clicks multiplied by 1+alpha at each window offset"});
    w.row({"decay_type", m.decay_type});
    w.row({"alpha_week0", num(m.alpha_week0)});
    w.row({"alpha_week1", num(m.alpha_week1)});
    w.row({"activity_rule", "active recomputed as total_clicks > 0"});
    w.row({"propagation_rule", "recency and streak re-propagated from the first modified week to t_final"});
    w.row({"submitted_this_week", "unmodified (not click-derived)"});
    w.row({"fractional_clicks", "kept fractional"});
    w.row({"rescoring", "modified rows re-encoded and scored by the same calibrated model"});
    w.row({"event_rows", "never modified"});
    w.close();
  }
  {
    csv::Writer w(sink.path("table_policy_activation_summary.csv"));
    w.row({"scenario_id", "enrollments", "triggered", "triggered_share", "test_rows",
           "active_rows", "active_row_share", "event_rows_forced_inactive"});
    for (std::size_t k = 0; k < out.scenarios.size(); ++k) {
      const auto& a = out.activations[k];
      w.row({out.scenarios[k].scenario_id, num(test.size()), num(a.triggered),
             num(double(a.triggered) / double(test.size())), num(test.rows()), num(a.active_rows),
             num(double(a.active_rows) / double(test.rows())), num(a.event_rows_forced_inactive)});
    }
    w.close();
  }
  {
    csv::Writer w(sink.path("table_policy_covariate_overwrites.csv"));
    w.row({"scenario_id", "feature", "rows_changed", "rows_changed_outside_window",
           "mean_delta_changed"});
    for (std::size_t k = 0; k < out.scenarios.size(); ++k) {
      for (const auto& o : out.mech[k].overwrites) {
        w.row({out.scenarios[k].scenario_id, o.feature, num(o.rows_changed),
               num(o.rows_changed_outside_window), num(o.mean_delta)});
      }
    }
    w.close();
  }
  {
    csv::Writer w(sink.path("table_policy_covariate_propagation_checks.csv"));
    w.row({"scenario_id", "check", "value", "pass"});
    const PolicyScenario* shock_ref = reference && reference->branch == PolicyBranch::kShock
                                          ? reference : nullptr;
    for (std::size_t k = 0; k < out.scenarios.size(); ++k) {
      const auto& sc = out.scenarios[k];
      if (sc.branch != PolicyBranch::kMechanismAware) continue;
      const auto& m = out.mech[k];
      const auto& act = out.activations[k];
      std::size_t post_event = 0, exclusivity = 0, activity = 0;
      for (std::size_t r = 0; r < test.rows(); ++r) {
        const bool changed = m.total_clicks[r] != test.total_clicks[r] ||
                             m.recency[r] != test.recency[r] || m.streak[r] != test.streak[r];
        if (test.event[r] && changed) ++post_event;
        const bool a = m.active[r] != 0;
        if (a != (m.total_clicks[r] > 0)) ++activity;
        if (a ? (m.recency[r] != 0 || m.streak[r] < 1) : (m.streak[r] != 0 || m.recency[r] < 1)) {
          ++exclusivity;
        }
      }
      PolicyScenario zero = sc;
      zero.alpha_week0 = zero.alpha_week1 = 0.0;
      const auto z = mech_rescore(hazard, test, scored.hazards, act, zero);
      const bool identical = z.hazards == scored.hazards;
      const std::string& id = sc.scenario_id;
      w.row({id, "rows_changed", num(m.rows_changed), ""});
      w.row({id, "rows_changed_share", num(double(m.rows_changed) / double(test.rows())), ""});
      w.row({id, "mean_hazard_delta_changed", num(m.mean_hazard_delta_changed), ""});
      if (shock_ref) {
        for (std::size_t j = 0; j < out.scenarios.size(); ++j) {
          if (&out.scenarios[j] != shock_ref) continue;
          w.row({id, "mean_hazard_delta_changed_" + shock_ref->scenario_id,
                 num(mean_hazard_delta_changed(scored.hazards, out.regime_hazards[j])), ""});
        }
      }
      w.row({id, "event_rows_modified", num(post_event), flag(post_event == 0)});
      w.row({id, "active_matches_clicks_violations", num(activity), flag(activity == 0)});
      w.row({id, "recency_streak_exclusivity_violations", num(exclusivity), flag(exclusivity == 0)});
      w.row({id, "zero_alpha_reproduces_baseline", flag(identical), flag(identical)});
    }
    w.close();
  }
  if (config.policy.run_grid) {
    const bool exclusive = reference ? reference->window_exclusive_upper : true;
    out.grid = sensitivity_grid(hazard, test, scored.hazards, config.policy.grid, T_max, exclusive);
    csv::Writer w(sink.path("table_rq2_sensitivity_grid.csv"));
    w.row({"config_id", "r_star", "window_W", "decay_type", "alpha_week0", "alpha_week1",
           "delta_shock", "triggered", "active_rows", "mech_rows_changed",
           "shock_delta_S_T_policy", "shock_delta_S_T_eval_policy", "shock_min_delta_S",
           "mech_delta_S_T_policy", "mech_delta_S_T_eval_policy"});
    for (const auto& g : out.grid) {
      const double min_shock = *std::min_element(g.shock.delta.begin(), g.shock.delta.end());
      w.row({num(g.config_id), num(g.r_star), num(g.window_W), g.decay_type, num(g.alpha_week0),
             num(g.alpha_week1), num(g.delta_shock), num(g.triggered), num(g.active_rows),
             num(g.mech_rows_changed), num(g.shock.delta_at(h.T_policy)),
             num(g.shock.delta_at(h.T_eval_policy)), num(min_shock),
             num(g.mech.delta_at(h.T_policy)), num(g.mech.delta_at(h.T_eval_policy))});
    }
    w.close();
  }
  return out;
}

// ---- curves ----

CurveSet curves_from(const ScoredTest& scored, const PolicyOutputs& policy) {
  const auto& test = scored.test;
  CurveSet c;
  c.T_policy = scored.horizons.T_policy;
  c.T_eval_metrics = scored.horizons.T_eval_metrics;
  c.T_eval_policy = scored.horizons.T_eval_policy;
  for (const auto& e : test.enrollments) {
    c.keys.push_back(e.key);
    c.statics.push_back(e.statics);
    c.t_final.push_back(e.t_final);
  }
  auto add = [&](const std::string& regime, std::span<const double> hazards) {
    const auto surv = survival_by_row(test, hazards);
    auto& curves = c.curves[regime];
    curves.resize(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      curves[i].resize(static_cast<std::size_t>(c.T_eval_policy) + 1);
      for (int t = 0; t <= c.T_eval_policy; ++t) {
        curves[i][static_cast<std::size_t>(t)] = survival_at(test, surv, i, t);
      }
    }
  };
  add("baseline", scored.hazards);
  for (std::size_t k = 0; k < policy.scenarios.size(); ++k) {
    if (policy.scenarios[k].scenario_id == "baseline") {
      throw Error(ErrorCode::kArgument, "scenario id 'baseline' is reserved");
    }
    add(policy.scenarios[k].scenario_id, policy.regime_hazards[k]);
  }
  return c;
}

void write_curves(ArtifactSink& sink, const CurveSet& c) {
  {
    csv::Writer w(sink.path("curves.csv"));
    std::vector<std::string> head{"id_student", "code_module", "code_presentation", "gender",
                                  "highest_education", "age_band", "num_of_prev_attempts",
                                  "studied_credits", "t_final", "regime"};
    for (int t = 0; t <= c.T_eval_policy; ++t) head.push_back("S_" + std::to_string(t));
    w.row(head);
    for (const auto& [regime, curves] : c.curves) {
      for (std::size_t i = 0; i < c.keys.size(); ++i) {
        const auto& s = c.statics[i];
        std::vector<std::string> f{num(c.keys[i].id_student), c.keys[i].code_module,
                                   c.keys[i].code_presentation, s.gender, s.highest_education,
                                   s.age_band, num(s.num_of_prev_attempts),
                                   num(s.studied_credits), num(c.t_final[i]), regime};
        for (double v : curves[i]) f.push_back(num(v));
        w.row(f);
      }
    }
    w.close();
  }
  csv::Writer w(sink.path("curves_meta.csv"));
  w.row({"quantity", "value"});
  w.row({"T_policy", num(c.T_policy)});
  w.row({"T_eval_metrics", num(c.T_eval_metrics)});
  w.row({"T_eval_policy", num(c.T_eval_policy)});
  w.close();
}

void export_curves(ArtifactSink& sink, const ScoredTest& scored, const PolicyOutputs& policy) {
  write_curves(sink, curves_from(scored, policy));
}

CurveSet read_curves(const fs::path& dir) {
  CurveSet c;
  {
    csv::Reader r(dir / "curves_meta.csv");
    const auto q = r.require("quantity"), v = r.require("value");
    std::vector<std::string> f;
    while (r.next(f)) {
      const auto value = csv::parse_int(f[v]);
      if (!value) throw Error(ErrorCode::kSchema, "curves_meta.csv: bad value for " + f[q]);
      if (f[q] == "T_policy") c.T_policy = static_cast<int>(*value);
      else if (f[q] == "T_eval_metrics") c.T_eval_metrics = static_cast<int>(*value);
      else if (f[q] == "T_eval_policy") c.T_eval_policy = static_cast<int>(*value);
      else throw Error(ErrorCode::kSchema, "curves_meta.csv: unknown quantity " + f[q]);
    }
  }
  csv::Reader r(dir / "curves.csv");
  const std::size_t c_id = r.require("id_student"), c_mod = r.require("code_module"),
                    c_pres = r.require("code_presentation"), c_gen = r.require("gender"),
                    c_edu = r.require("highest_education"), c_age = r.require("age_band"),
                    c_prev = r.require("num_of_prev_attempts"),
                    c_cred = r.require("studied_credits"), c_tf = r.require("t_final"),
                    c_reg = r.require("regime");
  std::vector<std::size_t> c_s;
  for (int t = 0; t <= c.T_eval_policy; ++t) c_s.push_back(r.require("S_" + std::to_string(t)));
  std::map<EnrollmentKey, std::size_t> index;
  std::vector<std::string> f;
  auto number = [&](const std::string& text) {
    auto v = csv::parse_double(text);
    if (!v) {
      throw Error(ErrorCode::kSchema, r.path().string() + ":" + std::to_string(r.line_number()) +
                                          ": bad number '" + text + "'");
    }
    return *v;
  };
  while (r.next(f)) {
    EnrollmentKey key{static_cast<std::int64_t>(number(f[c_id])), f[c_mod], f[c_pres]};
    auto [it, fresh] = index.try_emplace(key, c.keys.size());
    if (fresh) {
      c.keys.push_back(key);
      StaticCovariates s;
      s.gender = f[c_gen];
      s.highest_education = f[c_edu];
      s.age_band = f[c_age];
      s.num_of_prev_attempts = number(f[c_prev]);
      s.studied_credits = number(f[c_cred]);
      c.statics.push_back(s);
      c.t_final.push_back(static_cast<int>(number(f[c_tf])));
    }
    auto& curves = c.curves[f[c_reg]];
    if (curves.size() <= it->second) curves.resize(it->second + 1);
    auto& curve = curves[it->second];
    curve.clear();
    for (auto col : c_s) curve.push_back(number(f[col]));
  }
  for (const auto& [regime, curves] : c.curves) {
    if (curves.size() != c.keys.size()) {
      throw Error(ErrorCode::kSchema, "curves.csv: regime " + regime + " misses enrollments");
    }
    for (const auto& curve : curves) {
      if (curve.empty()) {
        throw Error(ErrorCode::kSchema, "curves.csv: regime " + regime + " misses enrollments");
      }
    }
  }
  if (!c.curves.count("baseline")) throw Error(ErrorCode::kSchema, "curves.csv: no baseline regime");
  return c;
}

// ---- subgroup ----

std::vector<GapResult> subgroup_stage(ArtifactSink& sink, const CurveSet& curves,
                                      const RunConfig& config) {
  const auto& sg = config.subgroup;
  auto policy_it = curves.curves.find(sg.scenario);
  if (policy_it == curves.curves.end()) {
    throw Error(ErrorCode::kArgument, "no curves for scenario '" + sg.scenario + "'");
  }
  const auto& base = curves.curves.at("baseline");
  std::vector<std::string> levels;
  for (std::size_t i = 0; i < curves.keys.size(); ++i) {
    levels.push_back(static_level(curves.keys[i], curves.statics[i], sg.column));
  }
  const GroupMapping mapping = map_groups(levels, sg.mapping);
  std::string level0, level1;
  for (const auto& [level, g] : sg.mapping) {
    std::string& name = g ? level1 : level0;
    name += name.empty() ? level : "|" + level;
  }
  const std::string orientation = level1 + " minus " + level0;

  std::vector<GapResult> results;
  const std::pair<const char*, int> horizons[] = {{"T_policy", curves.T_policy},
                                                  {"T_eval_metrics", curves.T_eval_metrics}};
  for (const auto& [name, T] : horizons) {
    if (T < 0 || T > curves.T_eval_policy) {
      throw Error(ErrorCode::kArgument, std::string("subgroup horizon ") + name + " out of range");
    }
    SubgroupSample sample;
    for (std::size_t k = 0; k < mapping.kept.size(); ++k) {
      const std::size_t i = mapping.kept[k];
      sample.group.push_back(mapping.group[k]);
      sample.s_baseline.push_back(base[i][static_cast<std::size_t>(T)]);
      sample.s_policy.push_back(policy_it->second[i][static_cast<std::size_t>(T)]);
    }
    GapResult g = bootstrap_ci(sample, T, {sg.B, config.seed, sg.stratified});
    g.group_column = sg.column;
    g.orientation = orientation;
    results.push_back(std::move(g));

    const GapResult& r = results.back();
    std::size_t n0 = 0, n1 = 0;
    for (auto v : sample.group) (v ? n1 : n0) += 1;
    csv::Writer w(sink.path(std::string("table_rq3_gap_") + name + ".csv"));
    w.row({"horizon", "T", "group_column", "level", "group", "n", "mean_S_baseline",
           "mean_S_policy"});
    w.row({name, num(T), sg.column, level0, "0", num(n0), num(r.mean0_baseline), num(r.mean0_policy)});
    w.row({name, num(T), sg.column, level1, "1", num(n1), num(r.mean1_baseline), num(r.mean1_policy)});
    w.row({name, num(T), sg.column, "gap (" + orientation + ")", "", "", num(r.gap_baseline),
           num(r.gap_policy)});
    w.close();
  }

  {
    csv::Writer w(sink.path("rq3_policy_bootstrap_wide.csv"));
    std::vector<std::string> head{"group_column", "orientation", "scenario", "B", "seed",
                                  "resampling", "redraws", "dropped_enrollments"};
    for (const auto& [name, T] : horizons) {
      const std::string s = name;
      for (const char* col : {"", "gap_baseline_", "gap_policy_", "delta_gap_", "ci_low_",
                              "ci_high_", "ci_excludes_zero_"}) {
        head.push_back(std::string(col).empty() ? s : std::string(col) + s);
      }
    }
    head.push_back("note");
    w.row(head);
    std::size_t redraws = 0;
    for (const auto& r : results) redraws += r.redraws;
    std::vector<std::string> row{sg.column, orientation, sg.scenario, num(sg.B),
                                 num(static_cast<std::int64_t>(config.seed)),
                                 sg.stratified ? "stratified_by_group" : "plain_enrollment",
                                 num(redraws), num(mapping.dropped)};
    for (const auto& r : results) {
      const bool excludes = r.ci_low > 0.0 || r.ci_high < 0.0;
      for (const auto& v : {num(r.T), num(r.gap_baseline), num(r.gap_policy), num(r.delta_gap),
                            num(r.ci_low), num(r.ci_high), flag(excludes)}) {
        row.push_back(v);
      }
    }
    row.push_back("percentile 95% CI; gaps read at T_policy and T_eval_metrics while Delta S "
                  "trajectories extend to T_eval_policy");
    w.row(row);
    w.close();
  }
  {
    csv::Writer w(sink.path("rq3_bootstrap_replicates.csv"));
    w.row({"horizon", "T", "replicate", "delta_gap"});
    for (std::size_t k = 0; k < results.size(); ++k) {
      for (std::size_t b = 0; b < results[k].replicates.size(); ++b) {
        w.row({horizons[k].first, num(results[k].T), num(b), num(results[k].replicates[b])});
      }
    }
    w.close();
  }
  return results;
}

// ---- manifest and orchestration ----

void write_manifest(const fs::path& root, const std::vector<fs::path>& files,
                    const RunConfig& config) {
  nlohmann::json list = nlohmann::json::array();
  std::set<std::string> seen;
  for (const auto& f : files) {
    const std::string rel = fs::relative(f, root).generic_string();
    if (!seen.insert(rel).second) {
      throw Error(ErrorCode::kContract, "manifest lists " + rel + " twice");
    }
    list.push_back({{"path", rel}, {"sha256", sha256_hex(f)}, {"bytes", fs::file_size(f)}});
  }
  nlohmann::json j = {{"format", "dtsurv-manifest"},
                      {"version", 1},
                      {"files", list},
                      {"config", nlohmann::json::parse(dump_config(config))}};
  std::ofstream out(root / "manifest.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in " + root.string());
  out << j.dump(2) << "\n";
}

RunAllResult run_all(const RunConfig& config) {
  config.validate();
  RunAllResult result;
  result.root = config.paths.output_root;
  const fs::path root = result.root;
  stage("prepare", [&] {
    // Only directories this pipeline owns are cleared, so stale files never
    // leak into a manifest.
    fs::remove_all(root / "tables");
    fs::remove_all(root / "work");
    fs::remove(root / "manifest.json");
    return 0;
  });
  ArtifactSink tables(root / "tables");
  ArtifactSink work(root / "work");

  fs::path data_dir = config.paths.data_dir;
  TableNames names;
  names.extension = config.paths.extension;
  if (config.synth) {
    stage("synthesize", [&] {
      const SynthCohort cohort = generate(*config.synth);
      data_dir = root / "work" / "data";
      write_raw_tables(data_dir, cohort.raw, names);
      for (const auto& entry : fs::directory_iterator(data_dir)) {
        work.path("data/" + entry.path().filename().string());
      }
      return 0;
    });
  }

  const RawTables raw = stage("ingest", [&] { return load_raw_tables(data_dir, names); });
  const Backbone backbone = stage("ingest", [&] {
    Backbone b = build_backbone(raw);
    write_enrollments(work.path("enrollments.csv"), b.enrollments);
    return b;
  });
  const PersonPeriodTable table = stage("build-person-period", [&] {
    PersonPeriodTable t = build_person_period(backbone.enrollments, raw);
    write_person_period(work.path("person_period.csv"), t);
    export_cohort_summary(tables, backbone, t);
    return t;
  });

  const SplitResult split_result = stage("split", [&] {
    SplitResult s = split_stage(table.enrollments, config);
    write_split(work.path("split.csv"), s.assignments);
    return s;
  });
  const TableSplit split = stage("split", [&] {
    TableSplit s = resolve_split(table, split_result.assignments);
    export_split_summary(tables, table, s, split_result.bucket_edges);
    return s;
  });

  const HazardModel hazard = stage("train", [&] {
    HazardModel m = train_stage(table, split, config);
    save_model(work.path("hazard_model.json"), m, "hazard");
    export_model_summary(tables, "table_hazard_model_coefficients.csv", m);
    return m;
  });
  const CensoringModel censoring = stage("censoring", [&] {
    CensoringModel m = censoring_stage(table, split, config);
    save_model(work.path("censoring_model.json"), m.model, "censoring");
    export_model_summary(tables, "table_censoring_model_coefficients.csv", m.model);
    return m;
  });
  const ScoredTest scored = stage("censoring", [&] {
    ScoredTest s = score_test(table, split, hazard, censoring, config);
    export_horizon_tables(tables, s);
    return s;
  });
  if (config.robustness.anchor_sensitivity) {
    stage("censoring", [&] {
      export_anchor_sensitivity(tables, table, split_result.assignments, config, scored.horizons);
      return 0;
    });
  }

  stage("evaluate", [&] {
    evaluate_stage(tables, table, split, hazard, scored, config,
                   config.robustness.composite_endpoint);
    return 0;
  });
  if (config.robustness.ablation) {
    stage("ablation", [&] {
      ablation_stage(tables, table, split, scored, config);
      return 0;
    });
  }
  if (!config.robustness.holdout_runs.empty()) {
    stage("holdout-run", [&] {
      holdout_run_stage(tables, table, config);
      return 0;
    });
  }

  const PolicyOutputs policy =
      stage("simulate-policy", [&] { return policy_stage(tables, hazard, scored, config); });
  const CurveSet curves = stage("simulate-policy", [&] {
    CurveSet c = curves_from(scored, policy);
    ArtifactSink curve_sink(root / "work" / "curves");
    write_curves(curve_sink, c);
    for (const auto& f : curve_sink.files()) work.path(fs::relative(f, work.dir()).generic_string());
    return c;
  });
  stage("subgroup", [&] {
    subgroup_stage(tables, curves, config);
    return 0;
  });

  stage("manifest", [&] {
    result.files = tables.files();
    result.files.insert(result.files.end(), work.files().begin(), work.files().end());
    write_manifest(root, result.files, config);
    result.manifest = root / "manifest.json";
    return 0;
  });
  return result;
}

}  // namespace dtsurv
