#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dtsurv/censoring.hpp"
#include "dtsurv/policy.hpp"
#include "dtsurv/synth.hpp"

namespace dtsurv {

struct SplitConfig {
  int q = 4;
  double test_size = 0.30;
  std::optional<std::string> holdout_run;  // "MODULE,PRESENTATION"
};

struct ModelConfig {
  double lambda = 1.0;
  int max_iter = 100;
  double tolerance = 1e-6;
};

struct PolicyConfig {
  std::vector<PolicyScenario> scenarios;
  std::string reference_scenario = "shock_d020";
  GridSpec grid;
  bool run_grid = true;
};

struct SubgroupConfig {
  std::string column = "gender";
  std::map<std::string, int> mapping{{"F", 1}, {"M", 0}};
  int B = 500;
  bool stratified = false;
  std::string scenario = "shock_d020";
};

struct RobustnessConfig {
  bool ablation = true;
  bool anchor_sensitivity = true;
  bool composite_endpoint = true;
  std::vector<std::string> holdout_runs;  // "MODULE,PRESENTATION"
};

struct PathsConfig {
  std::string data_dir = "data";
  std::string extension = ".csv";
  std::string output_root = "outputs_v2";
};

struct RunConfig {
  std::uint64_t seed = 42;
  SplitConfig split;
  ModelConfig model;
  int calibration_k = 5;
  HorizonConfig horizons;
  PolicyConfig policy;
  SubgroupConfig subgroup;
  RobustnessConfig robustness;
  PathsConfig paths;
  std::optional<SynthSpec> synth;  // run-all generates the data when set

  static RunConfig defaults();
  void validate() const;
};

// The default scenario catalog: three shock intensities and the shared
// mechanism-aware schedule.
std::vector<PolicyScenario> default_scenarios();

// Strict: unknown keys and wrongly typed values are rejected with the dotted
// key path in the message (ErrorCode::kConfig). Missing keys take defaults.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& config);

}  // namespace dtsurv
