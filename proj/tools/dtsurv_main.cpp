#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dtsurv/artifacts.hpp"
#include "dtsurv/config.hpp"
#include "dtsurv/csv.hpp"
#include "dtsurv/error.hpp"
#include "dtsurv/model_io.hpp"
#include "dtsurv/synth.hpp"

namespace fs = std::filesystem;
using namespace dtsurv;

namespace {

// Exit status per error code; 1 is left for CLI usage errors.
int exit_code(ErrorCode code) { return 10 + static_cast<int>(code); }

RunConfig config_from(const std::string& path) {
  return path.empty() ? RunConfig::defaults() : load_config(path);
}

TableNames names_from(const RunConfig& config) {
  TableNames n;
  n.extension = config.paths.extension;
  return n;
}

std::map<std::string, int> parse_mapping(const std::string& text) {
  std::map<std::string, int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kArgument, "mapping entry '" + item + "' is not LEVEL=0|1");
    }
    const auto v = csv::parse_int(csv::trim(item.substr(eq + 1)));
    if (!v || (*v != 0 && *v != 1)) {
      throw Error(ErrorCode::kArgument, "mapping entry '" + item + "' must map to 0 or 1");
    }
    out[csv::trim(item.substr(0, eq))] = static_cast<int>(*v);
  }
  return out;
}

struct Loaded {
  PersonPeriodTable table;
  TableSplit split;
  std::vector<SplitAssignment> assignments;
};

Loaded load_table_and_split(const std::string& pp, const std::string& split_file) {
  Loaded l;
  l.table = read_person_period(pp);
  l.assignments = read_split(split_file);
  l.split = resolve_split(l.table, l.assignments);
  return l;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtsurv: discrete-time dropout survival pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "run configuration (JSON)")->check(CLI::ExistingFile);

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
    return sub;
  };

  // synthesize
  std::string spec_path, out_dir;
  auto* synth = with_config(app.add_subcommand("synthesize", "generate a synthetic cohort"));
  synth->add_option("--spec", spec_path)->check(CLI::ExistingFile);
  synth->add_option("--out-dir", out_dir)->required();

  // ingest
  std::string data_dir, out;
  auto* ingest = with_config(app.add_subcommand("ingest", "build the enrollment backbone"));
  ingest->add_option("--data-dir", data_dir)->required();
  ingest->add_option("--out", out)->required();

  // build-person-period
  std::string enrollments_path;
  auto* build = with_config(app.add_subcommand("build-person-period", "expand to weekly rows"));
  build->add_option("--enrollments", enrollments_path)->required()->check(CLI::ExistingFile);
  build->add_option("--data-dir", data_dir)->required();
  build->add_option("--out", out)->required();

  // split
  std::string pp_path;
  std::optional<int> q;
  std::optional<double> test_size;
  std::optional<std::uint64_t> seed;
  std::string holdout_run;
  auto* split = with_config(app.add_subcommand("split", "stratified temporal split and folds"));
  split->add_option("--pp", pp_path)->required()->check(CLI::ExistingFile);
  split->add_option("--q", q);
  split->add_option("--test-size", test_size);
  split->add_option("--seed", seed);
  split->add_option("--holdout-run", holdout_run, "MODULE,PRESENTATION held out as test");
  split->add_option("--out", out)->required();

  // train
  std::string split_path, variant = "full";
  auto* train = with_config(app.add_subcommand("train", "fit the calibrated hazard model"));
  train->add_option("--pp", pp_path)->required()->check(CLI::ExistingFile);
  train->add_option("--split", split_path)->required()->check(CLI::ExistingFile);
  train->add_option("--variant", variant, "full|no_recency_streak|no_activity");
  train->add_option("--out", out)->required();

  // censoring
  std::string anchor = "current";
  auto* cens = with_config(app.add_subcommand("censoring", "fit the censoring model"));
  cens->add_option("--pp", pp_path)->required()->check(CLI::ExistingFile);
  cens->add_option("--split", split_path)->required()->check(CLI::ExistingFile);
  cens->add_option("--out", out)->required();
  cens->add_option("--anchor-variant", anchor, "current|trim1|trim2");
  cens->add_option("--out-dir", out_dir, "directory for the anchor sensitivity table");

  // evaluate
  std::string model_path, gmodel_path, endpoint;
  auto* eval = with_config(app.add_subcommand("evaluate", "row and horizon metrics"));
  eval->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--gmodel", gmodel_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--pp", pp_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--split", split_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--endpoint", endpoint, "primary|composite")
      ->check(CLI::IsMember({"primary", "composite"}));
  eval->add_option("--out-dir", out_dir)->required();

  // simulate-policy
  std::string curves_dir;
  auto* sim = with_config(app.add_subcommand("simulate-policy", "counterfactual scenarios"));
  sim->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--gmodel", gmodel_path, "censoring model (refit on train when omitted)")
      ->check(CLI::ExistingFile);
  sim->add_option("--pp", pp_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--split", split_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--out-dir", out_dir)->required();
  sim->add_option("--curves-dir", curves_dir, "default: <out-dir>/curves");

  // subgroup
  std::string group, mapping, scenario;
  std::optional<int> B;
  bool stratified = false;
  auto* sub = with_config(app.add_subcommand("subgroup", "change-in-gap with bootstrap CI"));
  sub->add_option("--curves-dir", curves_dir)->required()->check(CLI::ExistingDirectory);
  sub->add_option("--group", group);
  sub->add_option("--map", mapping, "e.g. F=1,M=0");
  sub->add_option("--B", B);
  sub->add_option("--seed", seed);
  sub->add_option("--scenario", scenario);
  sub->add_flag("--stratified", stratified, "resample within groups");
  sub->add_option("--out-dir", out_dir)->required();

  // run-all
  std::string out_root;
  auto* all = with_config(app.add_subcommand("run-all", "end-to-end pipeline with manifest"));
  all->add_option("--out-root", out_root, "overrides paths.output_root");
  all->add_option("--data-dir", data_dir, "overrides paths.data_dir");

  auto* show = with_config(app.add_subcommand("print-config", "print the effective configuration"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage problems exit 1 so that 10+ stays reserved for pipeline errors.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    RunConfig config = config_from(config_path);

    if (show->parsed()) {
      std::cout << dump_config(config) << "\n";
    } else if (synth->parsed()) {
      SynthSpec spec;
      if (!spec_path.empty()) spec = read_synth_spec(spec_path);
      else if (config.synth) spec = *config.synth;
      const SynthCohort cohort = generate(spec);
      write_raw_tables(out_dir, cohort.raw, names_from(config));
      std::ofstream(fs::path(out_dir) / "synth_spec.json") << dump_synth_spec(spec);
      std::cout << "wrote " << cohort.truth.size() << " enrollments to " << out_dir << "\n";
    } else if (ingest->parsed()) {
      const Backbone b = build_backbone(load_raw_tables(data_dir, names_from(config)));
      write_enrollments(out, b.enrollments);
      std::cout << "enrollments " << b.enrollments.size() << ", students " << b.unique_students
                << ", duplicates dropped " << b.duplicates_dropped << "\n";
    } else if (build->parsed()) {
      const auto enrollments = read_enrollments(enrollments_path);
      const auto table =
          build_person_period(enrollments, load_raw_tables(data_dir, names_from(config)));
      write_person_period(out, table);
      std::cout << "rows " << table.rows() << "\n";
    } else if (split->parsed()) {
      if (q) config.split.q = *q;
      if (test_size) config.split.test_size = *test_size;
      if (seed) config.seed = *seed;
      if (!holdout_run.empty()) config.split.holdout_run = holdout_run;
      config.validate();
      const auto table = read_person_period(pp_path);
      const SplitResult s = split_stage(table.enrollments, config);
      write_split(out, s.assignments);
      std::size_t n_test = 0;
      for (const auto& a : s.assignments) n_test += a.partition == Partition::kTest;
      std::cout << "train " << s.assignments.size() - n_test << ", test " << n_test << "\n";
    } else if (train->parsed()) {
      const Loaded l = load_table_and_split(pp_path, split_path);
      const HazardModel m = train_stage(l.table, l.split, config, parse_ablation_variant(variant));
      save_model(out, m, "hazard");
      std::cout << "iterations " << m.iterations << ", folds used " << m.calibration_folds_used
                << "\n";
    } else if (cens->parsed()) {
      const Loaded l = load_table_and_split(pp_path, split_path);
      const AnchorVariant v = parse_anchor_variant(anchor);
      const PersonPeriodTable anchored = apply_anchor(l.table, v);
      const TableSplit s = resolve_split(anchored, l.assignments);
      const CensoringModel m = censoring_stage(anchored, s, config);
      save_model(out, m.model, "censoring");
      if (config.robustness.anchor_sensitivity) {
        const HazardModel hz = train_stage(l.table, l.split, config);
        const ScoredTest scored = score_test(l.table, l.split, hz, censoring_stage(l.table, l.split, config), config);
        ArtifactSink sink(out_dir.empty() ? fs::path(config.paths.output_root) / "tables"
                                          : fs::path(out_dir));
        export_anchor_sensitivity(sink, l.table, l.assignments, config, scored.horizons);
      }
    } else if (eval->parsed()) {
      const Loaded l = load_table_and_split(pp_path, split_path);
      const HazardModel hz = load_model(model_path, "hazard");
      const CensoringModel cm{load_model(gmodel_path, "censoring")};
      const ScoredTest scored = score_test(l.table, l.split, hz, cm, config);
      ArtifactSink sink(out_dir);
      export_horizon_tables(sink, scored);
      const bool composite =
          endpoint.empty() ? config.robustness.composite_endpoint : endpoint == "composite";
      evaluate_stage(sink, l.table, l.split, hz, scored, config, composite);
    } else if (sim->parsed()) {
      const Loaded l = load_table_and_split(pp_path, split_path);
      const HazardModel hz = load_model(model_path, "hazard");
      const CensoringModel cm = gmodel_path.empty()
                                    ? censoring_stage(l.table, l.split, config)
                                    : CensoringModel{load_model(gmodel_path, "censoring")};
      const ScoredTest scored = score_test(l.table, l.split, hz, cm, config);
      ArtifactSink sink(out_dir);
      const PolicyOutputs p = policy_stage(sink, hz, scored, config);
      ArtifactSink curves(curves_dir.empty() ? fs::path(out_dir) / "curves" : fs::path(curves_dir));
      export_curves(curves, scored, p);
    } else if (sub->parsed()) {
      if (!group.empty()) config.subgroup.column = group;
      if (!mapping.empty()) config.subgroup.mapping = parse_mapping(mapping);
      if (B) config.subgroup.B = *B;
      if (seed) config.seed = *seed;
      if (!scenario.empty()) config.subgroup.scenario = scenario;
      if (stratified) config.subgroup.stratified = true;
      config.validate();
      ArtifactSink sink(out_dir);
      for (const auto& g : subgroup_stage(sink, read_curves(curves_dir), config)) {
        std::cout << "T=" << g.T << " delta_gap " << csv::format_double(g.delta_gap) << " ["
                  << csv::format_double(g.ci_low) << ", " << csv::format_double(g.ci_high)
                  << "]\n";
      }
    } else if (all->parsed()) {
      if (!out_root.empty()) config.paths.output_root = out_root;
      if (!data_dir.empty()) config.paths.data_dir = data_dir;
      const RunAllResult r = run_all(config);
      std::cout << "manifest " << r.manifest.string() << " (" << r.files.size() << " files)\n";
    }
  } catch (const Error& e) {
    std::cerr << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error[io]: " << e.what() << "\n";
    return exit_code(ErrorCode::kIo);
  }
  return 0;
}
