#include "dtsurv/ingestion.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "dtsurv/csv.hpp"
#include "dtsurv/error.hpp"

namespace dtsurv {

namespace {

namespace fs = std::filesystem;

using KeyIndex = std::unordered_map<EnrollmentKey, std::uint32_t, EnrollmentKeyHash>;

fs::path table_path(const fs::path& dir, const std::string& stem,
                    const std::string& extension) {
  return dir / (stem + extension);
}

std::int64_t require_int(const csv::Reader& reader, const std::string& text,
                         std::string_view column) {
  if (auto v = csv::parse_int(text)) return *v;
  throw Error(ErrorCode::kSchema, reader.path().string() + ":" +
                                      std::to_string(reader.line_number()) +
                                      ": column '" + std::string(column) +
                                      "' is not an integer: '" + text + "'");
}

struct KeyColumns {
  std::size_t module, presentation, student;
};

KeyColumns key_columns(const csv::Reader& reader) {
  return {reader.require("code_module"), reader.require("code_presentation"),
          reader.require("id_student")};
}

EnrollmentKey read_key(const csv::Reader& reader, const KeyColumns& cols,
                       const std::vector<std::string>& f) {
  return {require_int(reader, f[cols.student], "id_student"),
          csv::trim(f[cols.module]), csv::trim(f[cols.presentation])};
}

std::string level_or_unknown(const std::string& text) {
  std::string t = csv::trim(text);
  if (t.empty() || t == "?") return std::string(kUnknownLevel);
  return t;
}

}  // namespace

RawTables load_raw_tables(const fs::path& dir, const TableNames& names) {
  RawTables raw;
  KeyIndex index;
  std::vector<std::string> f;

  {
    csv::Reader reader(table_path(dir, names.student_info, names.extension));
    KeyColumns kc = key_columns(reader);
    const std::size_t c_gender = reader.require("gender");
    const std::size_t c_edu = reader.require("highest_education");
    const std::size_t c_age = reader.require("age_band");
    const std::size_t c_prev = reader.require("num_of_prev_attempts");
    const std::size_t c_credits = reader.require("studied_credits");
    const std::size_t c_result = reader.require("final_result");
    while (reader.next(f)) {
      EnrollmentKey key = read_key(reader, kc, f);
      auto [it, inserted] = index.emplace(key, static_cast<std::uint32_t>(raw.keys.size()));
      if (inserted) raw.keys.push_back(std::move(key));
      raw.student_info.push_back({it->second, f[c_gender], f[c_edu], f[c_age],
                                  f[c_prev], f[c_credits], csv::trim(f[c_result])});
    }
  }
  if (raw.student_info.empty()) {
    throw Error(ErrorCode::kEmptyInput, "studentInfo has no rows");
  }

  auto lookup = [&](const EnrollmentKey& key) -> std::optional<std::uint32_t> {
    auto it = index.find(key);
    if (it == index.end()) {
      ++raw.orphan_rows;
      return std::nullopt;
    }
    return it->second;
  };

  {
    csv::Reader reader(table_path(dir, names.registrations, names.extension));
    KeyColumns kc = key_columns(reader);
    const std::size_t c_reg = reader.require("date_registration");
    const std::size_t c_unreg = reader.require("date_unregistration");
    while (reader.next(f)) {
      auto ref = lookup(read_key(reader, kc, f));
      if (!ref) continue;
      raw.registrations.push_back({*ref, csv::parse_int(f[c_reg]), csv::parse_int(f[c_unreg])});
    }
  }

  {
    csv::Reader reader(table_path(dir, names.vle, names.extension));
    KeyColumns kc = key_columns(reader);
    const std::size_t c_date = reader.require("date");
    const std::size_t c_clicks = reader.require("sum_click");
    while (reader.next(f)) {
      auto ref = lookup(read_key(reader, kc, f));
      if (!ref) continue;
      std::int64_t clicks = require_int(reader, f[c_clicks], "sum_click");
      if (clicks < 0) {
        throw Error(ErrorCode::kSchema, reader.path().string() + ":" +
                                            std::to_string(reader.line_number()) +
                                            ": negative sum_click");
      }
      raw.vle_clicks.push_back({*ref,
                                static_cast<std::int32_t>(require_int(reader, f[c_date], "date")),
                                static_cast<std::int32_t>(clicks)});
    }
  }

  {
    csv::Reader reader(table_path(dir, names.student_assessment, names.extension));
    const std::size_t c_student = reader.require("id_student");
    const std::size_t c_date = reader.require("date_submitted");
    auto c_module = reader.find("code_module");
    auto c_presentation = reader.find("code_presentation");
    std::unordered_map<std::int64_t, std::pair<std::string, std::string>> assessment_run;
    std::optional<std::size_t> c_assessment;
    if (!c_module || !c_presentation) {
      c_assessment = reader.require("id_assessment");
      csv::Reader ar(table_path(dir, names.assessments, names.extension));
      const std::size_t a_id = ar.require("id_assessment");
      const std::size_t a_module = ar.require("code_module");
      const std::size_t a_presentation = ar.require("code_presentation");
      while (ar.next(f)) {
        assessment_run.emplace(require_int(ar, f[a_id], "id_assessment"),
                               std::make_pair(csv::trim(f[a_module]),
                                              csv::trim(f[a_presentation])));
      }
    }
    while (reader.next(f)) {
      EnrollmentKey key;
      key.id_student = require_int(reader, f[c_student], "id_student");
      if (c_assessment) {
        auto it = assessment_run.find(require_int(reader, f[*c_assessment], "id_assessment"));
        if (it == assessment_run.end()) {
          ++raw.orphan_rows;
          continue;
        }
        key.code_module = it->second.first;
        key.code_presentation = it->second.second;
      } else {
        key.code_module = csv::trim(f[*c_module]);
        key.code_presentation = csv::trim(f[*c_presentation]);
      }
      auto ref = lookup(key);
      if (!ref) continue;
      auto date = csv::parse_int(f[c_date]);
      if (!date) continue;  // unsubmitted / banked without a date
      raw.submissions.push_back({*ref, static_cast<std::int32_t>(*date)});
    }
  }
  return raw;
}

Endpoint derive_endpoint(const EndpointInputs& in) {
  Endpoint out;
  out.t_last_obs = in.last_vle_day ? week_of_day(*in.last_vle_day) : 0;
  if (in.final_result == FinalResult::kWithdrawn && in.date_unregistration) {
    out.event = true;
    out.t_event = week_of_day(*in.date_unregistration);
    out.t_final = *out.t_event;
  } else {
    out.t_final = out.t_last_obs;
  }
  return out;
}

Backbone build_backbone(const RawTables& raw) {
  if (raw.student_info.empty()) {
    throw Error(ErrorCode::kEmptyInput, "studentInfo has no rows");
  }
  const std::size_t n_keys = raw.keys.size();

  std::vector<const RegistrationRow*> registration(n_keys, nullptr);
  for (const auto& r : raw.registrations) {
    if (!registration[r.key_ref]) registration[r.key_ref] = &r;
  }
  std::vector<std::optional<std::int64_t>> last_day(n_keys);
  for (const auto& c : raw.vle_clicks) {
    auto& d = last_day[c.key_ref];
    if (!d || c.date > *d) d = c.date;
  }

  Backbone out;
  std::vector<bool> seen(n_keys, false);
  std::unordered_set<std::int64_t> students;
  for (const auto& row : raw.student_info) {
    if (seen[row.key_ref]) {
      ++out.duplicates_dropped;
      continue;
    }
    seen[row.key_ref] = true;
    const EnrollmentKey& key = raw.keys[row.key_ref];

    auto result = parse_final_result(row.final_result);
    if (!result) {
      throw Error(ErrorCode::kSchema, "enrollment " + key.to_string() +
                                          ": unknown final_result '" +
                                          row.final_result + "'");
    }
    auto prev = csv::parse_double(row.num_of_prev_attempts);
    auto credits = csv::parse_double(row.studied_credits);
    if (!prev || !credits) {
      throw Error(ErrorCode::kSchema,
                  "enrollment " + key.to_string() + ": column '" +
                      std::string(!prev ? "num_of_prev_attempts" : "studied_credits") +
                      "' is not numeric");
    }

    EndpointInputs in;
    in.final_result = *result;
    if (const RegistrationRow* reg = registration[row.key_ref]) {
      in.date_unregistration = reg->date_unregistration;
    }
    in.last_vle_day = last_day[row.key_ref];
    Endpoint ep = derive_endpoint(in);

    Enrollment e;
    e.key = key;
    e.event = ep.event;
    e.t_event = ep.t_event;
    e.t_last_obs = ep.t_last_obs;
    e.t_final = ep.t_final;
    e.final_result = *result;
    e.statics.gender = level_or_unknown(row.gender);
    e.statics.highest_education = level_or_unknown(row.highest_education);
    e.statics.age_band = level_or_unknown(row.age_band);
    e.statics.num_of_prev_attempts = *prev;
    e.statics.studied_credits = *credits;
    if (*result == FinalResult::kWithdrawn && !ep.event) ++out.withdrawn_without_date;
    students.insert(key.id_student);
    out.enrollments.push_back(std::move(e));
  }
  std::sort(out.enrollments.begin(), out.enrollments.end(),
            [](const Enrollment& a, const Enrollment& b) { return a.key < b.key; });
  out.unique_students = students.size();
  out.orphan_rows = raw.orphan_rows;
  return out;
}

namespace {
const std::vector<std::string> kEnrollmentHeader = {
    "id_student", "code_module", "code_presentation", "final_result", "E",
    "t_event", "t_last_obs", "t_final", "gender", "highest_education",
    "age_band", "num_of_prev_attempts", "studied_credits"};
}

void write_enrollments(const fs::path& path, const std::vector<Enrollment>& enrollments) {
  csv::Writer w(path);
  w.row(kEnrollmentHeader);
  for (const auto& e : enrollments) {
    w.row({csv::format_int(e.key.id_student), e.key.code_module,
           e.key.code_presentation, std::string(to_string(e.final_result)),
           e.event ? "1" : "0", e.t_event ? csv::format_int(*e.t_event) : "",
           csv::format_int(e.t_last_obs), csv::format_int(e.t_final),
           e.statics.gender, e.statics.highest_education, e.statics.age_band,
           csv::format_double(e.statics.num_of_prev_attempts),
           csv::format_double(e.statics.studied_credits)});
  }
  w.close();
}

std::vector<Enrollment> read_enrollments(const fs::path& path) {
  csv::Reader reader(path);
  std::vector<std::size_t> c;
  for (const auto& name : kEnrollmentHeader) c.push_back(reader.require(name));
  std::vector<Enrollment> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    Enrollment e;
    e.key = {require_int(reader, f[c[0]], "id_student"), f[c[1]], f[c[2]]};
    auto result = parse_final_result(f[c[3]]);
    if (!result) throw Error(ErrorCode::kSchema, path.string() + ": bad final_result");
    e.final_result = *result;
    e.event = require_int(reader, f[c[4]], "E") != 0;
    if (auto t = csv::parse_int(f[c[5]])) e.t_event = static_cast<int>(*t);
    e.t_last_obs = static_cast<int>(require_int(reader, f[c[6]], "t_last_obs"));
    e.t_final = static_cast<int>(require_int(reader, f[c[7]], "t_final"));
    e.statics.gender = f[c[8]];
    e.statics.highest_education = f[c[9]];
    e.statics.age_band = f[c[10]];
    auto prev = csv::parse_double(f[c[11]]);
    auto credits = csv::parse_double(f[c[12]]);
    if (!prev || !credits) throw Error(ErrorCode::kSchema, path.string() + ": bad numeric static");
    e.statics.num_of_prev_attempts = *prev;
    e.statics.studied_credits = *credits;
    if (e.event != e.t_event.has_value()) {
      throw Error(ErrorCode::kSchema, path.string() + ": t_event must be set iff E=1 (" +
                                          e.key.to_string() + ")");
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_raw_tables(const fs::path& dir, const RawTables& raw, const TableNames& names) {
  fs::create_directories(dir);
  auto key_fields = [&](std::uint32_t ref) {
    const EnrollmentKey& k = raw.keys[ref];
    return std::vector<std::string>{k.code_module, k.code_presentation,
                                    csv::format_int(k.id_student)};
  };
  {
    csv::Writer w(table_path(dir, names.student_info, names.extension));
    w.row({"code_module", "code_presentation", "id_student", "gender",
           "highest_education", "age_band", "num_of_prev_attempts",
           "studied_credits", "final_result"});
    for (const auto& r : raw.student_info) {
      auto f = key_fields(r.key_ref);
      f.insert(f.end(), {r.gender, r.highest_education, r.age_band,
                         r.num_of_prev_attempts, r.studied_credits, r.final_result});
      w.row(f);
    }
    w.close();
  }
  {
    csv::Writer w(table_path(dir, names.registrations, names.extension));
    w.row({"code_module", "code_presentation", "id_student", "date_registration",
           "date_unregistration"});
    for (const auto& r : raw.registrations) {
      auto f = key_fields(r.key_ref);
      f.push_back(r.date_registration ? csv::format_int(*r.date_registration) : "");
      f.push_back(r.date_unregistration ? csv::format_int(*r.date_unregistration) : "");
      w.row(f);
    }
    w.close();
  }
  {
    csv::Writer w(table_path(dir, names.vle, names.extension));
    w.row({"code_module", "code_presentation", "id_student", "id_site", "date", "sum_click"});
    for (const auto& r : raw.vle_clicks) {
      auto f = key_fields(r.key_ref);
      f.insert(f.end(), {"0", csv::format_int(r.date), csv::format_int(r.sum_click)});
      w.row(f);
    }
    w.close();
  }
  {
    csv::Writer w(table_path(dir, names.student_assessment, names.extension));
    w.row({"code_module", "code_presentation", "id_student", "id_assessment", "date_submitted"});
    for (const auto& r : raw.submissions) {
      auto f = key_fields(r.key_ref);
      f.insert(f.end(), {"0", csv::format_int(r.date_submitted)});
      w.row(f);
    }
    w.close();
  }
}

}  // namespace dtsurv
