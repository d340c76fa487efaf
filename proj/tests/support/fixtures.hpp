#pragma once

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "dtsurv/error.hpp"
#include "dtsurv/ingestion.hpp"
#include "dtsurv/person_period.hpp"
#include "dtsurv/rng.hpp"
#include "dtsurv/synth.hpp"

namespace fixtures {

using namespace dtsurv;

inline Enrollment enrollment(std::int64_t id, bool event, int t_final,
                             const std::string& gender = "F",
                             FinalResult result = FinalResult::kPass) {
  Enrollment e;
  e.key = {id, "AAA", "2013J"};
  e.event = event;
  e.t_final = t_final;
  e.t_last_obs = t_final;
  if (event) {
    e.t_event = t_final;
    e.final_result = FinalResult::kWithdrawn;
  } else {
    e.final_result = result;
  }
  e.statics.gender = gender;
  e.statics.highest_education = "A Level";
  e.statics.age_band = "0-35";
  return e;
}

inline WeeklyActivity clicks(std::initializer_list<std::pair<const int, double>> weeks) {
  WeeklyActivity a;
  a.clicks = weeks;
  return a;
}

inline PersonPeriodTable table(const std::vector<Enrollment>& enrollments,
                               const std::vector<WeeklyActivity>& activity) {
  return build_person_period(enrollments, activity);
}

struct Cohort {
  SynthCohort synth;
  Backbone backbone;
  PersonPeriodTable table;
};

inline Cohort synth_cohort(const SynthSpec& spec) {
  Cohort c;
  c.synth = generate(spec);
  c.backbone = build_backbone(c.synth.raw);
  c.table = build_person_period(c.backbone.enrollments, c.synth.raw);
  return c;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dtsurv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a dtsurv::Error");
  return ErrorCode::kContract;
}

}  // namespace fixtures
