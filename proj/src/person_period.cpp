#include "dtsurv/person_period.hpp"

#include <unordered_map>

#include "dtsurv/csv.hpp"
#include "dtsurv/error.hpp"

namespace dtsurv {

void propagate_recency_streak(std::span<const double> clicks,
                              std::span<std::uint8_t> active,
                              std::span<std::int32_t> recency,
                              std::span<std::int32_t> streak, std::size_t first) {
  for (std::size_t t = first; t < clicks.size(); ++t) {
    const std::int32_t prev_recency = t > 0 ? recency[t - 1] : 0;
    const std::int32_t prev_streak = t > 0 ? streak[t - 1] : 0;
    const bool a = clicks[t] > 0.0;
    active[t] = a ? 1 : 0;
    recency[t] = a ? 0 : prev_recency + 1;
    streak[t] = a ? prev_streak + 1 : 0;
  }
}

std::vector<PersonPeriodRow> expand(const Enrollment& e, const WeeklyActivity& activity) {
  if (e.t_final < 0) {
    throw Error(ErrorCode::kContract, "t_final < 0 for " + e.key.to_string());
  }
  const std::size_t n = static_cast<std::size_t>(e.t_final) + 1;
  std::vector<double> clicks(n, 0.0);
  for (const auto& [week, count] : activity.clicks) {
    if (week >= 0 && static_cast<std::size_t>(week) < n) clicks[week] += count;
  }
  std::vector<std::uint8_t> active(n);
  std::vector<std::int32_t> recency(n), streak(n);
  propagate_recency_streak(clicks, active, recency, streak);

  std::vector<PersonPeriodRow> rows(n);
  for (std::size_t t = 0; t < n; ++t) {
    PersonPeriodRow& r = rows[t];
    r.t = static_cast<int>(t);
    r.total_clicks = clicks[t];
    r.active = active[t] != 0;
    r.recency = recency[t];
    r.streak = streak[t];
    r.submitted_this_week = activity.submission_weeks.count(r.t) > 0;
    r.event = e.event && r.t == e.t_final;
  }
  return rows;
}

void PersonPeriodTable::append(const Enrollment& e, std::span<const PersonPeriodRow> rows) {
  const auto idx = static_cast<std::uint32_t>(enrollments.size());
  enrollments.push_back(e);
  for (const auto& r : rows) {
    enrollment_index.push_back(idx);
    week.push_back(r.t);
    total_clicks.push_back(r.total_clicks);
    recency.push_back(r.recency);
    streak.push_back(r.streak);
    submitted.push_back(r.submitted_this_week ? 1 : 0);
    active.push_back(r.active ? 1 : 0);
    event.push_back(r.event ? 1 : 0);
  }
  offsets.push_back(week.size());
}

std::vector<WeeklyActivity> aggregate_activity(const RawTables& raw,
                                               const std::vector<Enrollment>& enrollments) {
  std::unordered_map<EnrollmentKey, std::size_t, EnrollmentKeyHash> position;
  position.reserve(enrollments.size());
  for (std::size_t i = 0; i < enrollments.size(); ++i) position.emplace(enrollments[i].key, i);

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> ref_to_enrollment(raw.keys.size(), kNone);
  for (std::size_t r = 0; r < raw.keys.size(); ++r) {
    auto it = position.find(raw.keys[r]);
    if (it != position.end()) ref_to_enrollment[r] = it->second;
  }

  std::vector<WeeklyActivity> out(enrollments.size());
  for (const auto& c : raw.vle_clicks) {
    std::size_t i = ref_to_enrollment[c.key_ref];
    if (i == kNone) continue;
    out[i].clicks[week_of_day(c.date)] += c.sum_click;
  }
  for (const auto& s : raw.submissions) {
    std::size_t i = ref_to_enrollment[s.key_ref];
    if (i == kNone) continue;
    out[i].submission_weeks.insert(week_of_day(s.date_submitted));
  }
  return out;
}

PersonPeriodTable build_person_period(const std::vector<Enrollment>& enrollments,
                                      const std::vector<WeeklyActivity>& activity) {
  if (activity.size() != enrollments.size()) {
    throw Error(ErrorCode::kContract, "activity/enrollment size mismatch");
  }
  PersonPeriodTable table;
  std::size_t total = 0;
  for (const auto& e : enrollments) total += static_cast<std::size_t>(e.t_final) + 1;
  table.enrollments.reserve(enrollments.size());
  table.week.reserve(total);
  for (std::size_t i = 0; i < enrollments.size(); ++i) {
    auto rows = expand(enrollments[i], activity[i]);
    table.append(enrollments[i], rows);
  }
  return table;
}

PersonPeriodTable build_person_period(const std::vector<Enrollment>& enrollments,
                                      const RawTables& raw) {
  return build_person_period(enrollments, aggregate_activity(raw, enrollments));
}

PersonPeriodTable subset(const PersonPeriodTable& table,
                         std::span<const std::size_t> enrollment_indices) {
  PersonPeriodTable out;
  for (std::size_t i : enrollment_indices) {
    const auto idx = static_cast<std::uint32_t>(out.enrollments.size());
    out.enrollments.push_back(table.enrollments[i]);
    for (std::size_t r = table.begin_row(i); r < table.end_row(i); ++r) {
      out.enrollment_index.push_back(idx);
      out.week.push_back(table.week[r]);
      out.total_clicks.push_back(table.total_clicks[r]);
      out.recency.push_back(table.recency[r]);
      out.streak.push_back(table.streak[r]);
      out.submitted.push_back(table.submitted[r]);
      out.active.push_back(table.active[r]);
      out.event.push_back(table.event[r]);
    }
    out.offsets.push_back(out.week.size());
  }
  return out;
}

namespace {
const std::vector<std::string> kPersonPeriodHeader = {
    "id_student", "code_module", "code_presentation", "week", "total_clicks",
    "recency", "streak", "submitted_this_week", "active", "event", "gender",
    "highest_education", "age_band", "num_of_prev_attempts", "studied_credits",
    "final_result", "t_last_obs"};
}

void write_person_period(const std::filesystem::path& path, const PersonPeriodTable& table) {
  csv::Writer w(path);
  w.row(kPersonPeriodHeader);
  std::vector<std::string> f(kPersonPeriodHeader.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const Enrollment& e = table.enrollments[i];
    f[0] = csv::format_int(e.key.id_student);
    f[1] = e.key.code_module;
    f[2] = e.key.code_presentation;
    f[10] = e.statics.gender;
    f[11] = e.statics.highest_education;
    f[12] = e.statics.age_band;
    f[13] = csv::format_double(e.statics.num_of_prev_attempts);
    f[14] = csv::format_double(e.statics.studied_credits);
    f[15] = std::string(to_string(e.final_result));
    f[16] = csv::format_int(e.t_last_obs);
    for (std::size_t r = table.begin_row(i); r < table.end_row(i); ++r) {
      f[3] = csv::format_int(table.week[r]);
      f[4] = csv::format_double(table.total_clicks[r]);
      f[5] = csv::format_int(table.recency[r]);
      f[6] = csv::format_int(table.streak[r]);
      f[7] = table.submitted[r] ? "1" : "0";
      f[8] = table.active[r] ? "1" : "0";
      f[9] = table.event[r] ? "1" : "0";
      w.row(f);
    }
  }
  w.close();
}

PersonPeriodTable read_person_period(const std::filesystem::path& path) {
  csv::Reader reader(path);
  std::vector<std::size_t> c;
  for (const auto& name : kPersonPeriodHeader) c.push_back(reader.require(name));

  auto bad = [&](const std::string& what) {
    return Error(ErrorCode::kSchema, path.string() + ":" +
                                         std::to_string(reader.line_number()) + ": " + what);
  };
  auto as_int = [&](const std::string& text, const char* column) {
    auto v = csv::parse_int(text);
    if (!v) throw bad(std::string("column '") + column + "' is not an integer");
    return *v;
  };
  auto as_double = [&](const std::string& text, const char* column) {
    auto v = csv::parse_double(text);
    if (!v) throw bad(std::string("column '") + column + "' is not numeric");
    return *v;
  };

  PersonPeriodTable table;
  std::vector<PersonPeriodRow> pending;
  Enrollment current;
  bool have_current = false;

  auto flush = [&]() {
    if (!have_current) return;
    current.t_final = pending.back().t;
    current.event = false;
    for (const auto& r : pending) {
      if (r.event) {
        if (r.t != current.t_final) throw bad("event row before the terminal week for " + current.key.to_string());
        current.event = true;
      }
    }
    current.t_event.reset();
    if (current.event) current.t_event = current.t_final;
    if (table.size() > 0 && !(table.enrollments.back().key < current.key)) {
      throw bad("enrollments not sorted by key at " + current.key.to_string());
    }
    table.append(current, pending);
    pending.clear();
  };

  std::vector<std::string> f;
  while (reader.next(f)) {
    EnrollmentKey key{as_int(f[c[0]], "id_student"), f[c[1]], f[c[2]]};
    if (!have_current || key != current.key) {
      flush();
      current = Enrollment{};
      current.key = key;
      current.statics.gender = f[c[10]];
      current.statics.highest_education = f[c[11]];
      current.statics.age_band = f[c[12]];
      current.statics.num_of_prev_attempts = as_double(f[c[13]], "num_of_prev_attempts");
      current.statics.studied_credits = as_double(f[c[14]], "studied_credits");
      auto result = parse_final_result(f[c[15]]);
      if (!result) throw bad("unknown final_result");
      current.final_result = *result;
      current.t_last_obs = static_cast<int>(as_int(f[c[16]], "t_last_obs"));
      have_current = true;
    }
    PersonPeriodRow r;
    r.t = static_cast<int>(as_int(f[c[3]], "week"));
    if (r.t != static_cast<int>(pending.size())) {
      throw bad("weeks must run 0..t_final contiguously for " + key.to_string());
    }
    r.total_clicks = as_double(f[c[4]], "total_clicks");
    r.recency = static_cast<int>(as_int(f[c[5]], "recency"));
    r.streak = static_cast<int>(as_int(f[c[6]], "streak"));
    r.submitted_this_week = as_int(f[c[7]], "submitted_this_week") != 0;
    r.active = as_int(f[c[8]], "active") != 0;
    r.event = as_int(f[c[9]], "event") != 0;
    pending.push_back(r);
  }
  flush();
  return table;
}

}  // namespace dtsurv
