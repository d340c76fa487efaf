#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dtsurv/censoring.hpp"
#include "dtsurv/config.hpp"
#include "dtsurv/endpoint.hpp"
#include "dtsurv/hazard.hpp"
#include "dtsurv/ingestion.hpp"
#include "dtsurv/person_period.hpp"
#include "dtsurv/policy.hpp"
#include "dtsurv/splitting.hpp"
#include "dtsurv/subgroup.hpp"

namespace dtsurv {

// Registers every exported file so the manifest can list it exactly once.
class ArtifactSink {
 public:
  explicit ArtifactSink(std::filesystem::path dir);

  // Path for `file` inside the sink directory; throws kContract when the
  // same file is registered twice.
  std::filesystem::path path(const std::string& file);

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
};

std::string sha256_hex(const std::filesystem::path& file);

// Test-partition scoring shared by the evaluate, policy and subgroup stages.
struct ScoredTest {
  PersonPeriodTable test;
  std::vector<double> hazards;          // calibrated event hazard per test row
  std::vector<double> survival;         // per test row
  std::vector<double> censoring_hazards;
  std::vector<double> g_rows;           // row-conditional censoring survival
  std::vector<double> marginal_g;       // t = 0..T_eval_policy
  HorizonConfig horizons;
};

void export_cohort_summary(ArtifactSink& sink, const Backbone& backbone,
                           const PersonPeriodTable& table);
void export_split_summary(ArtifactSink& sink, const PersonPeriodTable& table,
                          const TableSplit& split, const std::vector<int>& bucket_edges);
void export_model_summary(ArtifactSink& sink, const std::string& file, const HazardModel& m);

// Stratified or leave-one-run-out split (config.split.holdout_run), with the
// calibration folds assigned.
SplitResult split_stage(const std::vector<Enrollment>& enrollments, const RunConfig& config);

HazardOptions hazard_options(const RunConfig& config, AblationVariant variant);

HazardModel train_stage(const PersonPeriodTable& table, const TableSplit& split,
                        const RunConfig& config,
                        AblationVariant variant = AblationVariant::kFull);
CensoringModel censoring_stage(const PersonPeriodTable& table,
                               const TableSplit& split, const RunConfig& config);

ScoredTest score_test(const PersonPeriodTable& table, const TableSplit& split,
                      const HazardModel& hazard, const CensoringModel& censoring,
                      const RunConfig& config);

// Writes table_censoring_G_by_week.csv and table_horizon_diagnostics.csv.
void export_horizon_tables(ArtifactSink& sink, const ScoredTest& scored);

void export_anchor_sensitivity(ArtifactSink& sink, const PersonPeriodTable& table,
                               std::span<const SplitAssignment> assignments,
                               const RunConfig& config,
                               const HorizonConfig& horizons);

// Row-level and horizon metrics (primary endpoint), calibration bins, by-group
// diagnostics, and the endpoint-sensitivity rows when `composite` is set.
void evaluate_stage(ArtifactSink& sink, const PersonPeriodTable& table,
                    const TableSplit& split, const HazardModel& hazard,
                    const ScoredTest& scored, const RunConfig& config,
                    bool composite);

void ablation_stage(ArtifactSink& sink, const PersonPeriodTable& table,
                    const TableSplit& split, const ScoredTest& scored,
                    const RunConfig& config);

void holdout_run_stage(ArtifactSink& sink, const PersonPeriodTable& table,
                       const RunConfig& config);

struct PolicyOutputs {
  std::vector<PolicyScenario> scenarios;
  std::vector<ScenarioContrast> contrasts;  // aligned with scenarios
  std::vector<ActivationTable> activations;
  std::vector<MechResult> mech;             // empty entries for shock scenarios
  std::vector<std::vector<double>> regime_hazards;
  std::vector<GridRow> grid;
};

PolicyOutputs policy_stage(ArtifactSink& sink, const HazardModel& hazard,
                           const ScoredTest& scored, const RunConfig& config);

struct CurveSet {
  std::vector<EnrollmentKey> keys;
  std::vector<StaticCovariates> statics;
  std::vector<int> t_final;
  // regime -> enrollment -> survival by week 0..T_max (LOCF already applied)
  std::map<std::string, std::vector<std::vector<double>>> curves;
  int T_policy = 18;
  int T_eval_metrics = -1;
  int T_eval_policy = 38;
};

// Per-enrollment survival trajectories under baseline and every scenario, one
// row per enrollment and regime with S_0..S_T columns, plus the horizon
// metadata the subgroup stage needs (curves.csv, curves_meta.csv).
CurveSet curves_from(const ScoredTest& scored, const PolicyOutputs& policy);
void write_curves(ArtifactSink& sink, const CurveSet& curves);
void export_curves(ArtifactSink& sink, const ScoredTest& scored,
                   const PolicyOutputs& policy);

CurveSet read_curves(const std::filesystem::path& dir);

// ΔGap point estimates and bootstrap CIs at T_policy and T_eval_metrics.
std::vector<GapResult> subgroup_stage(ArtifactSink& sink, const CurveSet& curves,
                                      const RunConfig& config);

void write_manifest(const std::filesystem::path& root,
                    const std::vector<std::filesystem::path>& files,
                    const RunConfig& config);

struct RunAllResult {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> files;
};

// Algorithm end to end; stage failures rethrow as dtsurv::Error with the
// stage name prefixed and the original code preserved.
RunAllResult run_all(const RunConfig& config);

}  // namespace dtsurv
