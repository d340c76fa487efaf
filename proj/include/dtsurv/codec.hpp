#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtsurv/person_period.hpp"

namespace dtsurv {

// Which covariates enter the design. The primary specification is six
// standardized numeric columns plus six one-hot categorical columns.
struct FeatureSpec {
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;

  static FeatureSpec primary();
  FeatureSpec without(std::span<const std::string> names) const;
  bool empty() const { return numeric.empty() && categorical.empty(); }
};

bool is_numeric_feature(const std::string& name);
bool is_categorical_feature(const std::string& name);

// Dynamic columns can be swapped out for counterfactual values; statics
// always come from the table's enrollments.
struct DynamicColumns {
  std::span<const double> total_clicks;
  std::span<const std::int32_t> recency;
  std::span<const std::int32_t> streak;
  std::span<const std::uint8_t> submitted;

  static DynamicColumns of(const PersonPeriodTable& table);
};

// Sparse design: a dense block of standardized numerics plus, per categorical
// column, the coefficient slot of the one-hot level (-1 for unseen levels).
struct EncodedRows {
  std::size_t n_rows = 0;
  std::size_t n_numeric = 0;
  std::size_t n_categorical = 0;
  std::size_t width = 0;  // coefficients excluding the intercept
  std::vector<double> numeric;       // n_rows x n_numeric, row-major
  std::vector<std::int32_t> onehot;  // n_rows x n_categorical

  std::span<const double> numeric_row(std::size_t r) const {
    return {numeric.data() + r * n_numeric, n_numeric};
  }
  std::span<const std::int32_t> onehot_row(std::size_t r) const {
    return {onehot.data() + r * n_categorical, n_categorical};
  }
};

struct FeatureCodec {
  std::vector<std::string> numeric_columns;
  std::vector<double> means;
  std::vector<double> stddevs;  // population convention
  std::vector<std::string> categorical_columns;
  std::vector<std::vector<std::string>> category_levels;  // sorted
  std::vector<std::string> dropped_columns;  // constant numerics

  std::size_t width() const;
  // Offset of categorical column c's first slot in the coefficient vector.
  std::size_t category_offset(std::size_t c) const;
  std::vector<std::string> coefficient_names() const;

  EncodedRows transform(const PersonPeriodTable& table,
                        std::span<const std::size_t> rows) const;
  EncodedRows transform(const PersonPeriodTable& table,
                        const DynamicColumns& dynamic,
                        std::span<const std::size_t> rows) const;
};

FeatureCodec fit_codec(const PersonPeriodTable& table,
                       std::span<const std::size_t> rows,
                       const FeatureSpec& spec = FeatureSpec::primary());

}  // namespace dtsurv
