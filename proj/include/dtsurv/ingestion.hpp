#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtsurv/types.hpp"

namespace dtsurv {

// Rows of the secondary tables reference keys through `key_ref`, an index
// into RawTables::keys (distinct student_info keys in first-occurrence order).
struct StudentInfoRow {
  std::uint32_t key_ref = 0;
  std::string gender;
  std::string highest_education;
  std::string age_band;
  std::string num_of_prev_attempts;
  std::string studied_credits;
  std::string final_result;
};

struct RegistrationRow {
  std::uint32_t key_ref = 0;
  std::optional<std::int64_t> date_registration;
  std::optional<std::int64_t> date_unregistration;  // empty when not parseable
};

struct ClickRow {
  std::uint32_t key_ref = 0;
  std::int32_t date = 0;
  std::int32_t sum_click = 0;
};

struct SubmissionRow {
  std::uint32_t key_ref = 0;
  std::int32_t date_submitted = 0;
};

struct RawTables {
  std::vector<EnrollmentKey> keys;
  std::vector<StudentInfoRow> student_info;  // file order, may repeat keys
  std::vector<RegistrationRow> registrations;
  std::vector<ClickRow> vle_clicks;
  std::vector<SubmissionRow> submissions;
  std::size_t orphan_rows = 0;  // secondary rows whose key is not in student_info
};

struct TableNames {
  std::string student_info = "studentInfo";
  std::string registrations = "studentRegistration";
  std::string vle = "studentVle";
  std::string student_assessment = "studentAssessment";
  std::string assessments = "assessments";
  std::string extension = ".csv";
};

// Reads the four tables (plus `assessments` when studentAssessment lacks the
// module/presentation columns, as in the original OULAD layout).
RawTables load_raw_tables(const std::filesystem::path& dir,
                          const TableNames& names = {});

struct Backbone {
  std::vector<Enrollment> enrollments;  // sorted by key
  std::size_t duplicates_dropped = 0;
  std::size_t unique_students = 0;
  std::size_t withdrawn_without_date = 0;
  std::size_t orphan_rows = 0;
};

// One enrollment per distinct key (first occurrence wins), endpoint derived.
Backbone build_backbone(const RawTables& raw);

struct EndpointInputs {
  FinalResult final_result = FinalResult::kPass;
  std::optional<std::int64_t> date_unregistration;
  std::optional<std::int64_t> last_vle_day;
};

struct Endpoint {
  bool event = false;
  std::optional<int> t_event;
  int t_last_obs = 0;
  int t_final = 0;
};

Endpoint derive_endpoint(const EndpointInputs& in);

void write_enrollments(const std::filesystem::path& path,
                       const std::vector<Enrollment>& enrollments);
std::vector<Enrollment> read_enrollments(const std::filesystem::path& path);

// Writes the RawTables in the OULAD file layout (studentAssessment carries
// the key columns directly, so no assessments file is needed).
void write_raw_tables(const std::filesystem::path& dir, const RawTables& raw,
                      const TableNames& names = {});

}  // namespace dtsurv
