#include "dtsurv/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dtsurv/error.hpp"
#include "strict_json.hpp"

namespace dtsurv {

using detail::json;
using detail::StrictObject;

namespace {

PolicyScenario make_shock(std::string id, std::string label, ScenarioStatus status, double delta) {
  PolicyScenario s;
  s.scenario_id = std::move(id);
  s.label = std::move(label);
  s.branch = PolicyBranch::kShock;
  s.status = status;
  s.delta_shock = delta;
  return s;
}

template <typename T>
void get_list(StrictObject& o, const std::string& key, std::vector<T>& out) {
  const json* v = o.child(key);
  if (!v) return;
  if (!v->is_array()) StrictObject::fail(o.key_path(key), "expected an array");
  out.clear();
  for (std::size_t k = 0; k < v->size(); ++k) {
    const json& item = (*v)[k];
    const std::string where = o.key_path(key) + "[" + std::to_string(k) + "]";
    if constexpr (std::is_same_v<T, int>) {
      if (!item.is_number_integer()) StrictObject::fail(where, "expected an integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!item.is_number()) StrictObject::fail(where, "expected a number");
    } else {
      if (!item.is_string()) StrictObject::fail(where, "expected a string");
    }
    out.push_back(item.get<T>());
  }
}

PolicyScenario parse_scenario(const json& j, const std::string& path) {
  StrictObject o(j, path);
  PolicyScenario s;
  o.get("scenario_id", s.scenario_id);
  o.get("label", s.label);
  std::string branch = to_string(s.branch), status = to_string(s.status);
  o.get("branch", branch);
  o.get("status", status);
  try {
    s.branch = parse_branch(branch);
    s.status = parse_status(status);
  } catch (const Error& e) {
    StrictObject::fail(path, e.what());
  }
  o.get("r_star", s.r_star);
  o.get("window_W", s.window_W);
  o.get("delta_shock", s.delta_shock);
  o.get("alpha_week0", s.alpha_week0);
  o.get("alpha_week1", s.alpha_week1);
  o.get("decay_type", s.decay_type);
  o.get("window_exclusive_upper", s.window_exclusive_upper);
  o.get("retrigger", s.retrigger);
  o.finish();
  return s;
}

json scenario_json(const PolicyScenario& s) {
  return {{"scenario_id", s.scenario_id},
          {"label", s.label},
          {"branch", to_string(s.branch)},
          {"status", to_string(s.status)},
          {"r_star", s.r_star},
          {"window_W", s.window_W},
          {"delta_shock", s.delta_shock},
          {"alpha_week0", s.alpha_week0},
          {"alpha_week1", s.alpha_week1},
          {"decay_type", s.decay_type},
          {"window_exclusive_upper", s.window_exclusive_upper},
          {"retrigger", s.retrigger}};
}

}  // namespace

std::vector<PolicyScenario> default_scenarios() {
  std::vector<PolicyScenario> out;
  out.push_back(make_shock("shock_d008", "Anchored conservative", ScenarioStatus::kAnchored, 0.08));
  out.push_back(make_shock("shock_d020", "Hypothetical A (reference)", ScenarioStatus::kHypothetical, 0.20));
  out.push_back(make_shock("shock_d060", "Hypothetical B (stress test)", ScenarioStatus::kHypothetical, 0.60));
  PolicyScenario mech;
  mech.scenario_id = "mech_shared";
  mech.label = "Mechanism-aware shared schedule";
  mech.branch = PolicyBranch::kMechanismAware;
  mech.status = ScenarioStatus::kHypothetical;
  out.push_back(mech);
  return out;
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.policy.scenarios = default_scenarios();
  return c;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& where, const std::string& what) {
    throw Error(ErrorCode::kConfig, "config key '" + where + "': " + what);
  };
  if (split.q < 1) fail("split.q", "must be >= 1");
  if (!(split.test_size > 0.0 && split.test_size < 1.0)) fail("split.test_size", "must be in (0, 1)");
  if (!(model.lambda >= 0.0)) fail("model.lambda", "must be >= 0");
  if (model.max_iter < 1) fail("model.max_iter", "must be >= 1");
  if (!(model.tolerance > 0.0)) fail("model.tolerance", "must be > 0");
  if (calibration_k < 2) fail("calibration.k", "must be >= 2");
  if (horizons.T_policy < 0) fail("horizons.T_policy", "must be >= 0");
  if (horizons.T_eval_policy < horizons.T_policy) {
    fail("horizons.T_eval_policy", "must be >= T_policy");
  }
  if (!(horizons.g_min > 0.0 && horizons.g_min < 1.0)) fail("horizons.g_min", "must be in (0, 1)");
  if (!(horizons.weight_cap >= 1.0)) fail("horizons.weight_cap", "must be >= 1");
  if (policy.scenarios.empty()) fail("policy.scenarios", "must not be empty");
  std::set<std::string> ids;
  for (std::size_t k = 0; k < policy.scenarios.size(); ++k) {
    const auto& s = policy.scenarios[k];
    try {
      s.validate();
    } catch (const Error& e) {
      fail("policy.scenarios[" + std::to_string(k) + "]", e.what());
    }
    if (!ids.insert(s.scenario_id).second) {
      fail("policy.scenarios[" + std::to_string(k) + "]", "duplicate scenario_id " + s.scenario_id);
    }
  }
  if (!ids.count(policy.reference_scenario)) {
    fail("policy.reference_scenario", "no scenario named '" + policy.reference_scenario + "'");
  }
  if (!ids.count(subgroup.scenario)) {
    fail("subgroup.scenario", "no scenario named '" + subgroup.scenario + "'");
  }
  if (policy.run_grid && policy.grid.size() == 0) fail("policy.grid", "empty grid");
  for (const auto& d : policy.grid.decay_type) {
    try {
      click_multiplier(d, 0, 0.0, 0.0);
    } catch (const Error& e) {
      fail("policy.grid.decay_type", e.what());
    }
  }
  if (subgroup.B < 1) fail("subgroup.B", "must be >= 1");
  bool has0 = false, has1 = false;
  for (const auto& [level, g] : subgroup.mapping) {
    if (g != 0 && g != 1) fail("subgroup.mapping." + level, "must be 0 or 1");
    (g ? has1 : has0) = true;
  }
  if (!has0 || !has1) fail("subgroup.mapping", "needs one level mapped to 0 and one to 1");
  if (synth) {
    try {
      synth->validate();
    } catch (const Error& e) {
      fail("synth", e.what());
    }
  }
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c = RunConfig::defaults();
  StrictObject root(j, "");
  root.get("seed", c.seed);

  if (const json* v = root.child("split")) {
    StrictObject o(*v, "split");
    o.get("q", c.split.q);
    o.get("test_size", c.split.test_size);
    if (const json* h = o.child("holdout_run"); h && !h->is_null()) {
      if (!h->is_string()) StrictObject::fail("split.holdout_run", "expected a string or null");
      c.split.holdout_run = h->get<std::string>();
    }
    o.finish();
  }
  if (const json* v = root.child("model")) {
    StrictObject o(*v, "model");
    o.get("lambda", c.model.lambda);
    o.get("max_iter", c.model.max_iter);
    o.get("tolerance", c.model.tolerance);
    o.finish();
  }
  if (const json* v = root.child("calibration")) {
    StrictObject o(*v, "calibration");
    o.get("k", c.calibration_k);
    o.finish();
  }
  if (const json* v = root.child("horizons")) {
    StrictObject o(*v, "horizons");
    o.get("T_policy", c.horizons.T_policy);
    o.get("T_eval_policy", c.horizons.T_eval_policy);
    o.get("g_min", c.horizons.g_min);
    o.get("weight_cap", c.horizons.weight_cap);
    o.finish();
  }
  if (const json* v = root.child("policy")) {
    StrictObject o(*v, "policy");
    if (const json* list = o.child("scenarios")) {
      if (!list->is_array()) StrictObject::fail("policy.scenarios", "expected an array");
      c.policy.scenarios.clear();
      for (std::size_t k = 0; k < list->size(); ++k) {
        c.policy.scenarios.push_back(
            parse_scenario((*list)[k], "policy.scenarios[" + std::to_string(k) + "]"));
      }
    }
    o.get("reference_scenario", c.policy.reference_scenario);
    o.get("run_grid", c.policy.run_grid);
    if (const json* g = o.child("grid")) {
      StrictObject go(*g, "policy.grid");
      get_list(go, "r_star", c.policy.grid.r_star);
      get_list(go, "window_W", c.policy.grid.window_W);
      get_list(go, "decay_type", c.policy.grid.decay_type);
      get_list(go, "alpha_week0", c.policy.grid.alpha_week0);
      get_list(go, "alpha_week1", c.policy.grid.alpha_week1);
      get_list(go, "delta_shock", c.policy.grid.delta_shock);
      go.finish();
    }
    o.finish();
  }
  if (const json* v = root.child("subgroup")) {
    StrictObject o(*v, "subgroup");
    o.get("column", c.subgroup.column);
    if (const json* m = o.child("mapping")) {
      StrictObject mo(*m, "subgroup.mapping");
      c.subgroup.mapping.clear();
      for (auto it = m->begin(); it != m->end(); ++it) {
        int g = 0;
        mo.get(it.key(), g);
        c.subgroup.mapping[it.key()] = g;
      }
      mo.finish();
    }
    o.get("B", c.subgroup.B);
    o.get("stratified", c.subgroup.stratified);
    o.get("scenario", c.subgroup.scenario);
    o.finish();
  }
  if (const json* v = root.child("robustness")) {
    StrictObject o(*v, "robustness");
    o.get("ablation", c.robustness.ablation);
    o.get("anchor_sensitivity", c.robustness.anchor_sensitivity);
    o.get("composite_endpoint", c.robustness.composite_endpoint);
    get_list(o, "holdout_runs", c.robustness.holdout_runs);
    o.finish();
  }
  if (const json* v = root.child("paths")) {
    StrictObject o(*v, "paths");
    o.get("data_dir", c.paths.data_dir);
    o.get("extension", c.paths.extension);
    o.get("output_root", c.paths.output_root);
    o.finish();
  }
  if (const json* v = root.child("synth"); v && !v->is_null()) {
    c.synth = parse_synth_spec(v->dump(), "synth");
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const RunConfig& c) {
  json scenarios = json::array();
  for (const auto& s : c.policy.scenarios) scenarios.push_back(scenario_json(s));
  json j = {
      {"seed", c.seed},
      {"split",
       {{"q", c.split.q},
        {"test_size", c.split.test_size},
        {"holdout_run", c.split.holdout_run ? json(*c.split.holdout_run) : json(nullptr)}}},
      {"model",
       {{"lambda", c.model.lambda}, {"max_iter", c.model.max_iter}, {"tolerance", c.model.tolerance}}},
      {"calibration", {{"k", c.calibration_k}}},
      {"horizons",
       {{"T_policy", c.horizons.T_policy},
        {"T_eval_policy", c.horizons.T_eval_policy},
        {"g_min", c.horizons.g_min},
        {"weight_cap", c.horizons.weight_cap}}},
      {"policy",
       {{"scenarios", scenarios},
        {"reference_scenario", c.policy.reference_scenario},
        {"run_grid", c.policy.run_grid},
        {"grid",
         {{"r_star", c.policy.grid.r_star},
          {"window_W", c.policy.grid.window_W},
          {"decay_type", c.policy.grid.decay_type},
          {"alpha_week0", c.policy.grid.alpha_week0},
          {"alpha_week1", c.policy.grid.alpha_week1},
          {"delta_shock", c.policy.grid.delta_shock}}}}},
      {"subgroup",
       {{"column", c.subgroup.column},
        {"mapping", c.subgroup.mapping},
        {"B", c.subgroup.B},
        {"stratified", c.subgroup.stratified},
        {"scenario", c.subgroup.scenario}}},
      {"robustness",
       {{"ablation", c.robustness.ablation},
        {"anchor_sensitivity", c.robustness.anchor_sensitivity},
        {"composite_endpoint", c.robustness.composite_endpoint},
        {"holdout_runs", c.robustness.holdout_runs}}},
      {"paths",
       {{"data_dir", c.paths.data_dir},
        {"extension", c.paths.extension},
        {"output_root", c.paths.output_root}}},
      {"synth", c.synth ? json::parse(dump_synth_spec(*c.synth)) : json(nullptr)},
  };
  return j.dump(2) + "\n";
}

}  // namespace dtsurv
