#include "fixtures.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dtsurv/synth.hpp"

using namespace dtsurv;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("flat hazard is recovered week by week") {
  SynthSpec spec;
  spec.n_enrollments = 20000;
  spec.max_weeks = 8;
  spec.base_hazard = 0.1;
  spec.censoring_rate = 0.0;
  const auto c = fixtures::synth_cohort(spec);
  std::vector<double> at_risk(spec.max_weeks, 0), events(spec.max_weeks, 0);
  for (std::size_t r = 0; r < c.table.rows(); ++r) {
    at_risk[c.table.week[r]] += 1;
    events[c.table.week[r]] += c.table.event[r];
  }
  for (int t = 0; t + 1 < spec.max_weeks; ++t) {
    REQUIRE(at_risk[t] > 1000);
    const double rate = events[t] / at_risk[t];
    const double se = std::sqrt(0.1 * 0.9 / at_risk[t]);
    CHECK(std::abs(rate - 0.1) < 3 * se);
  }
  // The final week is an administrative censoring point.
  CHECK(events[spec.max_weeks - 1] == 0);
  for (const auto& tr : c.synth.truth) {
    for (double h : tr.hazards) CHECK(h == doctest::Approx(0.1));
  }
}

TEST_CASE("certain censoring leaves no events") {
  SynthSpec spec;
  spec.n_enrollments = 300;
  spec.censoring_rate = 1.0;
  const auto c = fixtures::synth_cohort(spec);
  for (const auto& e : c.table.enrollments) {
    CHECK_FALSE(e.event);
    CHECK(e.t_final == 0);
  }
  for (const auto& tr : c.synth.truth) CHECK(tr.censor_week == 0);
}

TEST_CASE("censoring week equals the last observed week") {
  SynthSpec spec;
  spec.n_enrollments = 400;
  spec.censoring_rate = 0.05;
  spec.effects = {{"inactive", 1.0}};
  const auto c = fixtures::synth_cohort(spec);
  std::map<EnrollmentKey, const SynthTruth*> truth;
  for (const auto& t : c.synth.truth) truth[t.key] = &t;
  for (const auto& e : c.table.enrollments) {
    const auto& t = *truth.at(e.key);
    CHECK(e.event == t.event);
    if (t.event) {
      CHECK(e.t_final == t.event_week);
    } else {
      CHECK(e.t_final == t.censor_week);
    }
  }
}

TEST_CASE("same seed writes identical bytes") {
  SynthSpec spec;
  spec.n_enrollments = 200;
  spec.withdrawn_without_date_share = 0.2;
  const auto a = fixtures::scratch("synth_a");
  const auto b = fixtures::scratch("synth_b");
  write_raw_tables(a, generate(spec).raw);
  write_raw_tables(b, generate(spec).raw);
  std::size_t files = 0;
  for (const auto& f : std::filesystem::directory_iterator(a)) {
    ++files;
    CHECK(slurp(f.path()) == slurp(b / f.path().filename()));
  }
  CHECK(files == 4);

  spec.seed = 43;
  const auto c = fixtures::scratch("synth_c");
  write_raw_tables(c, generate(spec).raw);
  CHECK(slurp(a / "studentVle.csv") != slurp(c / "studentVle.csv"));
}

TEST_CASE("synth spec parsing is strict") {
  SynthSpec spec;
  spec.n_enrollments = 77;
  spec.effects = {{"recency", 0.3}, {"gender_F", -0.2}};
  const auto back = parse_synth_spec(dump_synth_spec(spec));
  CHECK(back.n_enrollments == 77);
  CHECK(back.effects == spec.effects);
  CHECK(dump_synth_spec(back) == dump_synth_spec(spec));

  CHECK(fixtures::code_of([] { parse_synth_spec(R"({"n_enrolments": 5})"); }) ==
        ErrorCode::kConfig);
  CHECK(fixtures::code_of([] { parse_synth_spec(R"({"effects": {"clicks": 1}})"); }) ==
        ErrorCode::kConfig);
  CHECK(fixtures::code_of([] { parse_synth_spec(R"({"base_hazard": 1.5})"); }) ==
        ErrorCode::kConfig);
  CHECK(fixtures::code_of([] { parse_synth_spec(R"({"max_weeks": "ten"})"); }) ==
        ErrorCode::kConfig);
  CHECK(fixtures::code_of([] { parse_synth_spec("{"); }) == ErrorCode::kConfig);
  try {
    parse_synth_spec(R"({"effects": {"clicks": 1}})", "synth");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("synth.effects.clicks") != std::string::npos);
  }
}
