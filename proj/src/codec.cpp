#include "dtsurv/codec.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "dtsurv/csv.hpp"
#include "dtsurv/error.hpp"

namespace dtsurv {

namespace {

enum class NumericId { kClicks, kCredits, kPrevAttempts, kRecency, kStreak, kSubmitted };
enum class CategoricalId { kWeek, kModule, kPresentation, kEducation, kAgeBand, kGender };

const std::vector<std::pair<std::string, NumericId>> kNumeric = {
    {"total_clicks", NumericId::kClicks},
    {"studied_credits", NumericId::kCredits},
    {"num_of_prev_attempts", NumericId::kPrevAttempts},
    {"recency", NumericId::kRecency},
    {"streak", NumericId::kStreak},
    {"submitted_this_week", NumericId::kSubmitted},
};

const std::vector<std::pair<std::string, CategoricalId>> kCategorical = {
    {"week", CategoricalId::kWeek},
    {"code_module", CategoricalId::kModule},
    {"code_presentation", CategoricalId::kPresentation},
    {"highest_education", CategoricalId::kEducation},
    {"age_band", CategoricalId::kAgeBand},
    {"gender", CategoricalId::kGender},
};

NumericId numeric_id(const std::string& name) {
  for (const auto& [n, id] : kNumeric)
    if (n == name) return id;
  throw Error(ErrorCode::kArgument, "unknown numeric feature '" + name + "'");
}

CategoricalId categorical_id(const std::string& name) {
  for (const auto& [n, id] : kCategorical)
    if (n == name) return id;
  throw Error(ErrorCode::kArgument, "unknown categorical feature '" + name + "'");
}

double numeric_value(NumericId id, const PersonPeriodTable& table,
                     const DynamicColumns& dyn, std::size_t r) {
  switch (id) {
    case NumericId::kClicks: return dyn.total_clicks[r];
    case NumericId::kCredits: return table.enrollment_of(r).statics.studied_credits;
    case NumericId::kPrevAttempts: return table.enrollment_of(r).statics.num_of_prev_attempts;
    case NumericId::kRecency: return dyn.recency[r];
    case NumericId::kStreak: return dyn.streak[r];
    case NumericId::kSubmitted: return dyn.submitted[r];
  }
  return 0.0;
}

std::string categorical_value(CategoricalId id, const PersonPeriodTable& table, std::size_t r) {
  const Enrollment& e = table.enrollment_of(r);
  switch (id) {
    case CategoricalId::kWeek: return std::to_string(table.week[r]);
    case CategoricalId::kModule: return e.key.code_module;
    case CategoricalId::kPresentation: return e.key.code_presentation;
    case CategoricalId::kEducation: return e.statics.highest_education;
    case CategoricalId::kAgeBand: return e.statics.age_band;
    case CategoricalId::kGender: return e.statics.gender;
  }
  return {};
}

bool level_less(const std::string& a, const std::string& b) {
  auto ia = csv::parse_int(a);
  auto ib = csv::parse_int(b);
  if (ia && ib) return *ia < *ib;
  if (ia != ib && (ia || ib)) return ia.has_value();  // numbers first
  return a < b;
}

}  // namespace

FeatureSpec FeatureSpec::primary() {
  FeatureSpec spec;
  for (const auto& [n, id] : kNumeric) spec.numeric.push_back(n);
  for (const auto& [n, id] : kCategorical) spec.categorical.push_back(n);
  return spec;
}

FeatureSpec FeatureSpec::without(std::span<const std::string> names) const {
  FeatureSpec out;
  auto dropped = [&](const std::string& n) {
    return std::find(names.begin(), names.end(), n) != names.end();
  };
  for (const auto& n : numeric)
    if (!dropped(n)) out.numeric.push_back(n);
  for (const auto& n : categorical)
    if (!dropped(n)) out.categorical.push_back(n);
  return out;
}

bool is_numeric_feature(const std::string& name) {
  return std::any_of(kNumeric.begin(), kNumeric.end(), [&](auto& p) { return p.first == name; });
}

bool is_categorical_feature(const std::string& name) {
  return std::any_of(kCategorical.begin(), kCategorical.end(),
                     [&](auto& p) { return p.first == name; });
}

DynamicColumns DynamicColumns::of(const PersonPeriodTable& table) {
  return {table.total_clicks, table.recency, table.streak, table.submitted};
}

std::size_t FeatureCodec::width() const {
  std::size_t w = numeric_columns.size();
  for (const auto& levels : category_levels) w += levels.size();
  return w;
}

std::size_t FeatureCodec::category_offset(std::size_t c) const {
  std::size_t off = numeric_columns.size();
  for (std::size_t i = 0; i < c; ++i) off += category_levels[i].size();
  return off;
}

std::vector<std::string> FeatureCodec::coefficient_names() const {
  std::vector<std::string> names = numeric_columns;
  for (std::size_t c = 0; c < categorical_columns.size(); ++c) {
    for (const auto& level : category_levels[c]) {
      names.push_back(categorical_columns[c] + "=" + level);
    }
  }
  return names;
}

FeatureCodec fit_codec(const PersonPeriodTable& table, std::span<const std::size_t> rows,
                       const FeatureSpec& spec) {
  if (rows.empty()) throw Error(ErrorCode::kArgument, "fit_codec: no training rows");
  FeatureCodec codec;
  const DynamicColumns dyn = DynamicColumns::of(table);
  const double n = static_cast<double>(rows.size());
  for (const auto& name : spec.numeric) {
    const NumericId id = numeric_id(name);
    double mean = 0.0;
    for (std::size_t r : rows) mean += numeric_value(id, table, dyn, r);
    mean /= n;
    double ss = 0.0;
    for (std::size_t r : rows) {
      const double d = numeric_value(id, table, dyn, r) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      warn("codec: dropping constant numeric column '" + name + "'");
      codec.dropped_columns.push_back(name);
      continue;
    }
    codec.numeric_columns.push_back(name);
    codec.means.push_back(mean);
    codec.stddevs.push_back(sd);
  }
  for (const auto& name : spec.categorical) {
    const CategoricalId id = categorical_id(name);
    std::set<std::string> levels;
    for (std::size_t r : rows) levels.insert(categorical_value(id, table, r));
    std::vector<std::string> sorted(levels.begin(), levels.end());
    std::sort(sorted.begin(), sorted.end(), level_less);
    codec.categorical_columns.push_back(name);
    codec.category_levels.push_back(std::move(sorted));
  }
  return codec;
}

EncodedRows FeatureCodec::transform(const PersonPeriodTable& table,
                                    std::span<const std::size_t> rows) const {
  return transform(table, DynamicColumns::of(table), rows);
}

EncodedRows FeatureCodec::transform(const PersonPeriodTable& table, const DynamicColumns& dyn,
                                    std::span<const std::size_t> rows) const {
  EncodedRows out;
  out.n_rows = rows.size();
  out.n_numeric = numeric_columns.size();
  out.n_categorical = categorical_columns.size();
  out.width = width();
  out.numeric.resize(out.n_rows * out.n_numeric);
  out.onehot.resize(out.n_rows * out.n_categorical);

  std::vector<NumericId> num_ids;
  for (const auto& n : numeric_columns) num_ids.push_back(numeric_id(n));
  std::vector<CategoricalId> cat_ids;
  std::vector<std::unordered_map<std::string, std::int32_t>> slots(categorical_columns.size());
  for (std::size_t c = 0; c < categorical_columns.size(); ++c) {
    cat_ids.push_back(categorical_id(categorical_columns[c]));
    const auto off = static_cast<std::int32_t>(category_offset(c));
    for (std::size_t l = 0; l < category_levels[c].size(); ++l) {
      slots[c].emplace(category_levels[c][l], off + static_cast<std::int32_t>(l));
    }
  }

  // Static one-hot slots are cached per enrollment; rows of one enrollment
  // are usually contiguous.
  std::vector<std::int32_t> cached(categorical_columns.size(), -1);
  std::size_t cached_enrollment = static_cast<std::size_t>(-1);

  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t r = rows[k];
    double* num = out.numeric.data() + k * out.n_numeric;
    for (std::size_t j = 0; j < num_ids.size(); ++j) {
      num[j] = (numeric_value(num_ids[j], table, dyn, r) - means[j]) / stddevs[j];
    }
    const std::size_t e = table.enrollment_index[r];
    std::int32_t* hot = out.onehot.data() + k * out.n_categorical;
    for (std::size_t c = 0; c < cat_ids.size(); ++c) {
      if (cat_ids[c] != CategoricalId::kWeek && e == cached_enrollment) {
        hot[c] = cached[c];
        continue;
      }
      auto it = slots[c].find(categorical_value(cat_ids[c], table, r));
      hot[c] = it == slots[c].end() ? -1 : it->second;
      if (cat_ids[c] != CategoricalId::kWeek) cached[c] = hot[c];
    }
    cached_enrollment = e;
  }
  return out;
}

}  // namespace dtsurv
