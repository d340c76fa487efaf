#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "dtsurv/ingestion.hpp"
#include "dtsurv/types.hpp"

namespace dtsurv {

struct PersonPeriodRow {
  int t = 0;
  double total_clicks = 0.0;
  int recency = 0;
  int streak = 0;
  bool submitted_this_week = false;
  bool active = false;
  bool event = false;
};

// Clicks per clamped week and the set of weeks with a submission.
struct WeeklyActivity {
  std::map<int, double> clicks;
  std::set<int> submission_weeks;
};

// Weekly rows t = 0..t_final. Week-0 recency starts from a virtual
// recency_{-1} = 0, so an inactive first week has recency 1.
std::vector<PersonPeriodRow> expand(const Enrollment& e,
                                    const WeeklyActivity& activity);

// Recomputes active/recency/streak from clicks for rows[first..] given the
// state carried in from rows[first-1]. Used by expansion and by the
// counterfactual operator.
void propagate_recency_streak(std::span<const double> clicks,
                              std::span<std::uint8_t> active,
                              std::span<std::int32_t> recency,
                              std::span<std::int32_t> streak,
                              std::size_t first = 0);

// Columnar person-period table. Rows of enrollment i live in
// [offsets[i], offsets[i+1]), ordered by week.
struct PersonPeriodTable {
  std::vector<Enrollment> enrollments;  // sorted by key
  std::vector<std::size_t> offsets{0};

  std::vector<std::uint32_t> enrollment_index;
  std::vector<std::int32_t> week;
  std::vector<double> total_clicks;
  std::vector<std::int32_t> recency;
  std::vector<std::int32_t> streak;
  std::vector<std::uint8_t> submitted;
  std::vector<std::uint8_t> active;
  std::vector<std::uint8_t> event;

  std::size_t rows() const { return week.size(); }
  std::size_t size() const { return enrollments.size(); }
  std::size_t begin_row(std::size_t i) const { return offsets[i]; }
  std::size_t end_row(std::size_t i) const { return offsets[i + 1]; }

  void append(const Enrollment& e, std::span<const PersonPeriodRow> rows);
  const Enrollment& enrollment_of(std::size_t row) const {
    return enrollments[enrollment_index[row]];
  }
};

std::vector<WeeklyActivity> aggregate_activity(
    const RawTables& raw, const std::vector<Enrollment>& enrollments);

PersonPeriodTable build_person_period(const std::vector<Enrollment>& enrollments,
                                      const std::vector<WeeklyActivity>& activity);

// Convenience: aggregate + build in one pass.
PersonPeriodTable build_person_period(const std::vector<Enrollment>& enrollments,
                                      const RawTables& raw);

// Keeps the listed enrollments (indices into table.enrollments), preserving order.
PersonPeriodTable subset(const PersonPeriodTable& table,
                         std::span<const std::size_t> enrollment_indices);

// Column order: id_student, code_module, code_presentation, week, total_clicks,
// recency, streak, submitted_this_week, active, event, gender,
// highest_education, age_band, num_of_prev_attempts, studied_credits,
// final_result, t_last_obs.
void write_person_period(const std::filesystem::path& path,
                         const PersonPeriodTable& table);
PersonPeriodTable read_person_period(const std::filesystem::path& path);

}  // namespace dtsurv
