#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "dtsurv/ingestion.hpp"
#include "dtsurv/person_period.hpp"
#include "dtsurv/splitting.hpp"

// Leakage checks shared by the unit and acceptance suites. Each returns an
// empty string on success, otherwise a description of the first violation.
namespace leakage {

using namespace dtsurv;

// Rebuilds every enrollment from raw data cut at week c (all clicks and
// submissions after day 7c+6 removed) and compares rows 0..c. Checks the cut
// weeks 0, t_final/2 and t_final-1 of each enrollment.
inline std::string truncation(const PersonPeriodTable& table, const RawTables& raw) {
  const auto full_activity = aggregate_activity(raw, table.enrollments);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const Enrollment& e = table.enrollments[i];
    std::set<int> cuts{0, e.t_final / 2, std::max(e.t_final - 1, 0)};
    for (int c : cuts) {
      if (c > e.t_final) continue;
      Enrollment cut = e;
      cut.t_final = c;
      cut.event = e.event && c == e.t_final;
      if (!cut.event) cut.t_event.reset();
      WeeklyActivity act;
      for (const auto& [w, n] : full_activity[i].clicks) {
        if (w <= c) act.clicks[w] = n;
      }
      for (int w : full_activity[i].submission_weeks) {
        if (w <= c) act.submission_weeks.insert(w);
      }
      const auto rows = expand(cut, act);
      for (int t = 0; t <= c; ++t) {
        const std::size_t r = table.begin_row(i) + static_cast<std::size_t>(t);
        const auto& x = rows[static_cast<std::size_t>(t)];
        if (x.total_clicks != table.total_clicks[r] || x.recency != table.recency[r] ||
            x.streak != table.streak[r] || x.active != (table.active[r] != 0) ||
            x.submitted_this_week != (table.submitted[r] != 0)) {
          return "enrollment " + e.key.to_string() + " week " + std::to_string(t) +
                 " changes when data after week " + std::to_string(c) + " is removed";
        }
      }
    }
  }
  return {};
}

inline std::string partition_disjoint(std::span<const SplitAssignment> assignments) {
  std::set<EnrollmentKey> train, test;
  for (const auto& a : assignments) {
    auto& s = a.partition == Partition::kTrain ? train : test;
    if (!s.insert(a.key).second) return "key " + a.key.to_string() + " assigned twice";
  }
  for (const auto& k : train) {
    if (test.count(k)) return "key " + k.to_string() + " in both train and test";
  }
  return {};
}

// Every row of an enrollment shares its fold, folds hold only train keys, and
// no key sits in two folds.
inline std::string folds_grouped(const PersonPeriodTable& table, const TableSplit& split) {
  std::vector<std::set<int>> folds_of(table.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    folds_of[table.enrollment_index[r]].insert(split.row_fold[r]);
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (folds_of[i].size() > 1) {
      return "enrollment " + table.enrollments[i].key.to_string() + " spans several folds";
    }
    const bool train = split.enrollment_partition[i] == Partition::kTrain;
    const int f = folds_of[i].empty() ? -1 : *folds_of[i].begin();
    if (train != (f >= 0)) {
      return "enrollment " + table.enrollments[i].key.to_string() + " fold/partition mismatch";
    }
  }
  return {};
}

}  // namespace leakage
