#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dtsurv {

// (id_student, code_module, code_presentation)
struct EnrollmentKey {
  std::int64_t id_student = 0;
  std::string code_module;
  std::string code_presentation;

  auto operator<=>(const EnrollmentKey&) const = default;
  bool operator==(const EnrollmentKey&) const = default;

  std::string to_string() const;
};

struct EnrollmentKeyHash {
  std::size_t operator()(const EnrollmentKey& key) const noexcept;
};

enum class FinalResult { kPass, kFail, kWithdrawn, kDistinction };

std::string_view to_string(FinalResult result);
std::optional<FinalResult> parse_final_result(std::string_view text);

inline constexpr std::string_view kUnknownLevel = "unknown";

struct StaticCovariates {
  std::string gender{kUnknownLevel};
  std::string highest_education{kUnknownLevel};
  std::string age_band{kUnknownLevel};
  double num_of_prev_attempts = 0.0;
  double studied_credits = 0.0;

  bool operator==(const StaticCovariates&) const = default;
};

struct Enrollment {
  EnrollmentKey key;
  bool event = false;              // primary endpoint E
  std::optional<int> t_event;      // set iff event
  int t_last_obs = 0;              // last observed VLE week, 0 without activity
  int t_final = 0;                 // t_event if event, else t_last_obs
  FinalResult final_result = FinalResult::kPass;
  StaticCovariates statics;

  bool operator==(const Enrollment&) const = default;
};

// Week index of a day offset: max(floor(d / 7), 0).
constexpr int week_of_day(std::int64_t day) {
  std::int64_t q = day / 7;
  if (day % 7 != 0 && day < 0) --q;
  return q < 0 ? 0 : static_cast<int>(q);
}

}  // namespace dtsurv
