#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtsurv/person_period.hpp"
#include "dtsurv/types.hpp"

namespace dtsurv {

enum class Partition : std::uint8_t { kTrain, kTest };

struct SplitAssignment {
  EnrollmentKey key;
  Partition partition = Partition::kTrain;
  bool event = false;
  int bucket = 0;
  int time_for_split = 0;
  int fold = -1;  // train only, after grouped_kfold
};

struct SplitOptions {
  int q = 4;
  double test_size = 0.30;
  std::uint64_t seed = 42;
};

struct SplitResult {
  std::vector<SplitAssignment> assignments;  // same order as the input
  std::vector<int> bucket_edges;
  std::size_t singleton_strata = 0;
};

// Linear-interpolation empirical quantiles at i/q, floored and deduplicated.
std::vector<int> quantile_edges(std::span<const int> values, int q);

// Index of the bucket holding `value` given monotone edges; the first bucket
// is closed on the left, every bucket closed on the right.
int bucket_of(int value, std::span<const int> edges);

// Round half to even.
std::int64_t round_half_even(double x);

SplitResult stratified_split(std::span<const Enrollment> enrollments,
                             const SplitOptions& options);

// Leave-one-run-out: every enrollment of (module, presentation) goes to test.
SplitResult holdout_run_split(std::span<const Enrollment> enrollments,
                              const std::string& code_module,
                              const std::string& code_presentation,
                              int q = 4);

// Fold labels for the train assignments (in place). Train enrollments are
// visited in key order, shuffled by the seeded stream and dealt round-robin,
// so fold sizes differ by at most one.
void grouped_kfold(std::vector<SplitAssignment>& assignments, int k,
                   std::uint64_t seed);

// A split resolved against a person-period table: row and enrollment index
// sets per partition, plus the fold of each row (-1 outside train).
struct TableSplit {
  std::vector<std::size_t> train_enrollments;
  std::vector<std::size_t> test_enrollments;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::vector<int> row_fold;
  std::vector<int> enrollment_fold;
  std::vector<Partition> enrollment_partition;
};

// Throws kContract when a table enrollment has no assignment.
TableSplit resolve_split(const PersonPeriodTable& table,
                         std::span<const SplitAssignment> assignments);

void write_split(const std::filesystem::path& path,
                 std::span<const SplitAssignment> assignments);
std::vector<SplitAssignment> read_split(const std::filesystem::path& path);

}  // namespace dtsurv
