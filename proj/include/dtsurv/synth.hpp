#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dtsurv/ingestion.hpp"

namespace dtsurv {

// Recognised effect names (log-odds added to logit(base_hazard)):
//   inactive      - week without VLE activity
//   recency       - per week of recency
//   at_risk       - latent at-risk flag
//   gender_F      - static gender F
//   prev_attempts - per previous attempt
struct SynthSpec {
  std::size_t n_enrollments = 1000;
  int max_weeks = 39;
  double base_hazard = 0.02;
  std::map<std::string, double> effects;
  double censoring_rate = 0.01;
  double engagement = 0.75;          // P(active) for engaged enrollments
  double at_risk_engagement = 0.35;  // P(active) under the latent at-risk flag
  double at_risk_share = 0.3;
  double submission_rate = 0.3;      // P(submission | active week)
  double withdrawn_without_date_share = 0.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SynthTruth {
  EnrollmentKey key;
  bool at_risk = false;
  bool event = false;
  int event_week = -1;
  int censor_week = -1;
  std::vector<double> hazards;  // true weekly hazard for t = 0..last week
};

struct SynthCohort {
  RawTables raw;
  std::vector<SynthTruth> truth;  // in generation order
};

// Per week: censoring is drawn first, then activity, then the event from the
// true hazard. A censored enrollment is forced active in its censoring week so
// that the ingested last VLE week equals the censoring week; the last week of
// the horizon is an administrative censoring point handled the same way.
SynthCohort generate(const SynthSpec& spec);

// Strict JSON: unknown keys are rejected; `key_prefix` prefixes the key path
// in error messages (e.g. "synth" when embedded in a run config).
SynthSpec parse_synth_spec(const std::string& json_text,
                           const std::string& key_prefix = "");
std::string dump_synth_spec(const SynthSpec& spec);
SynthSpec read_synth_spec(const std::filesystem::path& path);

}  // namespace dtsurv
