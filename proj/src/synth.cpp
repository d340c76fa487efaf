#include "dtsurv/synth.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dtsurv/error.hpp"
#include "dtsurv/kernels.hpp"
#include "dtsurv/rng.hpp"
#include "strict_json.hpp"

namespace dtsurv {

namespace {

const std::array<const char*, 5> kEffectNames = {"inactive", "recency", "at_risk", "gender_F",
                                                 "prev_attempts"};
const std::array<const char*, 4> kModules = {"AAA", "BBB", "CCC", "DDD"};
const std::array<const char*, 2> kPresentations = {"2013J", "2014J"};
const std::array<const char*, 3> kEducation = {"A Level or Equivalent", "HE Qualification",
                                               "Lower Than A Level"};
const std::array<const char*, 3> kAgeBands = {"0-35", "35-55", "55<="};
const std::array<int, 4> kCredits = {30, 60, 90, 120};

double effect(const SynthSpec& spec, const char* name) {
  auto it = spec.effects.find(name);
  return it == spec.effects.end() ? 0.0 : it->second;
}

bool unit_interval(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kArgument, "synth spec: " + what); };
  if (n_enrollments < 1) fail("n_enrollments must be >= 1");
  if (max_weeks < 1) fail("max_weeks must be >= 1");
  if (!(base_hazard > 0.0 && base_hazard < 1.0)) fail("base_hazard must be in (0, 1)");
  if (!unit_interval(censoring_rate)) fail("censoring_rate must be in [0, 1]");
  if (!unit_interval(engagement) || !unit_interval(at_risk_engagement)) {
    fail("engagement probabilities must be in [0, 1]");
  }
  if (!unit_interval(at_risk_share)) fail("at_risk_share must be in [0, 1]");
  if (!unit_interval(submission_rate)) fail("submission_rate must be in [0, 1]");
  if (!unit_interval(withdrawn_without_date_share)) {
    fail("withdrawn_without_date_share must be in [0, 1]");
  }
  for (const auto& [name, v] : effects) {
    bool known = false;
    for (const char* n : kEffectNames) known = known || name == n;
    if (!known) fail("unknown effect '" + name + "'");
    if (!std::isfinite(v)) fail("effect '" + name + "' is not finite");
  }
}

SynthCohort generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "synth"));
  SynthCohort out;
  RawTables& raw = out.raw;
  const double base_logit = std::log(spec.base_hazard / (1.0 - spec.base_hazard));

  for (std::size_t i = 0; i < spec.n_enrollments; ++i) {
    const auto ref = static_cast<std::uint32_t>(raw.keys.size());
    EnrollmentKey key{static_cast<std::int64_t>(100000 + i),
                      kModules[rng.uniform_index(kModules.size())],
                      kPresentations[rng.uniform_index(kPresentations.size())]};
    raw.keys.push_back(key);

    const bool female = rng.bernoulli(0.5);
    const int attempts = rng.bernoulli(0.8) ? 0 : 1 + static_cast<int>(rng.uniform_index(2));
    StudentInfoRow info;
    info.key_ref = ref;
    info.gender = female ? "F" : "M";
    info.highest_education = kEducation[rng.uniform_index(kEducation.size())];
    info.age_band = kAgeBands[rng.uniform_index(kAgeBands.size())];
    info.num_of_prev_attempts = std::to_string(attempts);
    info.studied_credits = std::to_string(kCredits[rng.uniform_index(kCredits.size())]);

    SynthTruth truth;
    truth.key = key;
    truth.at_risk = rng.bernoulli(spec.at_risk_share);
    const double p_active = truth.at_risk ? spec.at_risk_engagement : spec.engagement;
    const double static_logit = base_logit + effect(spec, "at_risk") * truth.at_risk +
                                effect(spec, "gender_F") * female +
                                effect(spec, "prev_attempts") * attempts;

    int recency = 0;
    for (int t = 0; t < spec.max_weeks; ++t) {
      const bool last = t == spec.max_weeks - 1;
      const bool censored = last || rng.bernoulli(spec.censoring_rate);
      const bool active = censored || rng.bernoulli(p_active);
      recency = active ? 0 : recency + 1;
      const double logit = static_logit + effect(spec, "inactive") * !active +
                           effect(spec, "recency") * recency;
      truth.hazards.push_back(kernels::sigmoid(logit));

      if (active) {
        raw.vle_clicks.push_back({ref, static_cast<std::int32_t>(7 * t + rng.uniform_index(7)),
                                  static_cast<std::int32_t>(1 + rng.uniform_index(20))});
        if (rng.bernoulli(spec.submission_rate)) {
          raw.submissions.push_back({ref, static_cast<std::int32_t>(7 * t + rng.uniform_index(7))});
        }
      }
      if (censored) {
        truth.censor_week = t;
        break;
      }
      if (rng.bernoulli(truth.hazards.back())) {
        truth.event = true;
        truth.event_week = t;
        break;
      }
    }

    RegistrationRow reg;
    reg.key_ref = ref;
    reg.date_registration = -static_cast<std::int64_t>(rng.uniform_index(60));
    if (truth.event) {
      info.final_result = "Withdrawn";
      if (!rng.bernoulli(spec.withdrawn_without_date_share)) {
        reg.date_unregistration = 7 * truth.event_week + static_cast<std::int64_t>(rng.uniform_index(7));
      }
    } else {
      const double u = rng.uniform01();
      info.final_result = u < 0.3 ? "Fail" : (u < 0.9 ? "Pass" : "Distinction");
    }
    raw.student_info.push_back(std::move(info));
    raw.registrations.push_back(reg);
    out.truth.push_back(std::move(truth));
  }
  return out;
}

SynthSpec parse_synth_spec(const std::string& json_text, const std::string& key_prefix) {
  detail::json j;
  try {
    j = detail::json::parse(json_text);
  } catch (const detail::json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("synth spec is not valid JSON: ") + e.what());
  }
  SynthSpec s;
  detail::StrictObject o(j, key_prefix);
  o.get("n_enrollments", s.n_enrollments);
  o.get("max_weeks", s.max_weeks);
  o.get("base_hazard", s.base_hazard);
  if (const auto* eff = o.child("effects")) {
    detail::StrictObject e(*eff, o.key_path("effects"));
    for (const char* name : kEffectNames) {
      double v = 0.0;
      if (eff->contains(name)) {
        e.get(name, v);
        s.effects[name] = v;
      }
    }
    e.finish();
  }
  o.get("censoring_rate", s.censoring_rate);
  o.get("engagement", s.engagement);
  o.get("at_risk_engagement", s.at_risk_engagement);
  o.get("at_risk_share", s.at_risk_share);
  o.get("submission_rate", s.submission_rate);
  o.get("withdrawn_without_date_share", s.withdrawn_without_date_share);
  o.get("seed", s.seed);
  o.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return s;
}

std::string dump_synth_spec(const SynthSpec& s) {
  detail::json j = {
      {"n_enrollments", s.n_enrollments},
      {"max_weeks", s.max_weeks},
      {"base_hazard", s.base_hazard},
      {"effects", s.effects},
      {"censoring_rate", s.censoring_rate},
      {"engagement", s.engagement},
      {"at_risk_engagement", s.at_risk_engagement},
      {"at_risk_share", s.at_risk_share},
      {"submission_rate", s.submission_rate},
      {"withdrawn_without_date_share", s.withdrawn_without_date_share},
      {"seed", s.seed},
  };
  return j.dump(2);
}

SynthSpec read_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open synth spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_synth_spec(buf.str());
}

}  // namespace dtsurv
