#include "dtsurv/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "dtsurv/csv.hpp"
#include "dtsurv/error.hpp"
#include "dtsurv/rng.hpp"

namespace dtsurv {

std::vector<int> quantile_edges(std::span<const int> values, int q) {
  if (q < 1) throw Error(ErrorCode::kArgument, "q must be >= 1");
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "no values for quantile edges");
  std::vector<int> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t n1 = static_cast<std::int64_t>(sorted.size()) - 1;
  std::vector<int> edges;
  for (int i = 0; i <= q; ++i) {
    // Position i*(n-1)/q, split into an exact integer part and fraction.
    const std::int64_t num = static_cast<std::int64_t>(i) * n1;
    const std::int64_t lo = num / q;
    const double frac = static_cast<double>(num % q) / q;
    double v = sorted[lo];
    if (frac > 0.0) v += frac * (sorted[lo + 1] - sorted[lo]);
    const int edge = static_cast<int>(std::floor(v));
    if (edges.empty() || edge != edges.back()) edges.push_back(edge);
  }
  if (static_cast<int>(edges.size()) < q + 1) {
    warn("quantile split: " + std::to_string(q) + " buckets requested, " +
         std::to_string(std::max<int>(1, static_cast<int>(edges.size()) - 1)) +
         " distinct after collapsing duplicate edges");
  }
  return edges;
}

int bucket_of(int value, std::span<const int> edges) {
  if (edges.size() < 2) return 0;
  const int nb = static_cast<int>(edges.size()) - 1;
  for (int b = 0; b < nb; ++b) {
    if (value <= edges[b + 1]) return b;
  }
  return nb - 1;
}

std::int64_t round_half_even(double x) {
  const double f = std::floor(x);
  const double diff = x - f;
  auto fi = static_cast<std::int64_t>(f);
  if (diff > 0.5) return fi + 1;
  if (diff < 0.5) return fi;
  return (fi % 2 == 0) ? fi : fi + 1;
}

namespace {

int time_for_split(const Enrollment& e) { return e.event ? *e.t_event : e.t_final; }

std::vector<SplitAssignment> base_assignments(std::span<const Enrollment> enrollments,
                                              std::vector<int>& edges, int q) {
  std::vector<int> times;
  times.reserve(enrollments.size());
  for (const auto& e : enrollments) times.push_back(time_for_split(e));
  edges = quantile_edges(times, q);
  std::vector<SplitAssignment> out(enrollments.size());
  for (std::size_t i = 0; i < enrollments.size(); ++i) {
    out[i].key = enrollments[i].key;
    out[i].event = enrollments[i].event;
    out[i].time_for_split = times[i];
    out[i].bucket = bucket_of(times[i], edges);
  }
  return out;
}

}  // namespace

SplitResult stratified_split(std::span<const Enrollment> enrollments,
                             const SplitOptions& options) {
  if (!(options.test_size > 0.0 && options.test_size < 1.0)) {
    throw Error(ErrorCode::kArgument, "test_size must lie in (0, 1)");
  }
  SplitResult result;
  result.assignments = base_assignments(enrollments, result.bucket_edges, options.q);

  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < enrollments.size(); ++i) {
    strata[{enrollments[i].event ? 1 : 0, result.assignments[i].bucket}].push_back(i);
  }

  Rng rng(derive_seed(options.seed, "split"));
  for (auto& [stratum, members] : strata) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return enrollments[a].key < enrollments[b].key;
    });
    const std::size_t n = members.size();
    if (n == 1) {
      ++result.singleton_strata;
      warn("split: singleton stratum (E=" + std::to_string(stratum.first) +
           ", bucket=" + std::to_string(stratum.second) + ") assigned to train");
      continue;
    }
    std::int64_t k = round_half_even(options.test_size * static_cast<double>(n));
    k = std::clamp<std::int64_t>(k, 1, static_cast<std::int64_t>(n) - 1);
    std::vector<std::size_t> order = members;
    rng.shuffle(std::span<std::size_t>(order));
    for (std::int64_t j = 0; j < k; ++j) {
      result.assignments[order[j]].partition = Partition::kTest;
    }
  }
  return result;
}

SplitResult holdout_run_split(std::span<const Enrollment> enrollments,
                              const std::string& code_module,
                              const std::string& code_presentation, int q) {
  SplitResult result;
  result.assignments = base_assignments(enrollments, result.bucket_edges, q);
  std::size_t held = 0;
  for (std::size_t i = 0; i < enrollments.size(); ++i) {
    if (enrollments[i].key.code_module == code_module &&
        enrollments[i].key.code_presentation == code_presentation) {
      result.assignments[i].partition = Partition::kTest;
      ++held;
    }
  }
  if (held == 0) {
    throw Error(ErrorCode::kArgument,
                "holdout run " + code_module + "," + code_presentation + " has no enrollments");
  }
  if (held == enrollments.size()) {
    throw Error(ErrorCode::kArgument, "holdout run covers every enrollment; nothing left to train on");
  }
  return result;
}

void grouped_kfold(std::vector<SplitAssignment>& assignments, int k, std::uint64_t seed) {
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    assignments[i].fold = -1;
    if (assignments[i].partition == Partition::kTrain) train.push_back(i);
  }
  if (k < 2) throw Error(ErrorCode::kArgument, "k must be >= 2");
  if (static_cast<std::size_t>(k) > train.size()) {
    throw Error(ErrorCode::kArgument, "k=" + std::to_string(k) + " exceeds the " +
                                          std::to_string(train.size()) + " train enrollments");
  }
  std::sort(train.begin(), train.end(), [&](std::size_t a, std::size_t b) {
    return assignments[a].key < assignments[b].key;
  });
  Rng rng(derive_seed(seed, "folds"));
  rng.shuffle(std::span<std::size_t>(train));
  for (std::size_t pos = 0; pos < train.size(); ++pos) {
    assignments[train[pos]].fold = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
}

TableSplit resolve_split(const PersonPeriodTable& table,
                         std::span<const SplitAssignment> assignments) {
  std::unordered_map<EnrollmentKey, const SplitAssignment*, EnrollmentKeyHash> by_key;
  by_key.reserve(assignments.size());
  for (const auto& a : assignments) by_key.emplace(a.key, &a);

  TableSplit out;
  out.row_fold.assign(table.rows(), -1);
  out.enrollment_fold.assign(table.size(), -1);
  out.enrollment_partition.assign(table.size(), Partition::kTrain);
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto it = by_key.find(table.enrollments[i].key);
    if (it == by_key.end()) {
      throw Error(ErrorCode::kContract,
                  "no split assignment for " + table.enrollments[i].key.to_string());
    }
    const SplitAssignment& a = *it->second;
    out.enrollment_partition[i] = a.partition;
    auto& rows = a.partition == Partition::kTrain ? out.train_rows : out.test_rows;
    (a.partition == Partition::kTrain ? out.train_enrollments : out.test_enrollments).push_back(i);
    const int fold = a.partition == Partition::kTrain ? a.fold : -1;
    out.enrollment_fold[i] = fold;
    for (std::size_t r = table.begin_row(i); r < table.end_row(i); ++r) {
      rows.push_back(r);
      out.row_fold[r] = fold;
    }
  }
  return out;
}

void write_split(const std::filesystem::path& path, std::span<const SplitAssignment> assignments) {
  csv::Writer w(path);
  w.row({"id_student", "code_module", "code_presentation", "partition", "E",
         "bucket", "time_for_split", "fold"});
  for (const auto& a : assignments) {
    w.row({csv::format_int(a.key.id_student), a.key.code_module, a.key.code_presentation,
           a.partition == Partition::kTrain ? "train" : "test", a.event ? "1" : "0",
           csv::format_int(a.bucket), csv::format_int(a.time_for_split),
           csv::format_int(a.fold)});
  }
  w.close();
}

std::vector<SplitAssignment> read_split(const std::filesystem::path& path) {
  csv::Reader reader(path);
  const std::vector<std::string> names = {"id_student", "code_module", "code_presentation",
                                          "partition", "E", "bucket", "time_for_split", "fold"};
  std::vector<std::size_t> c;
  for (const auto& n : names) c.push_back(reader.require(n));
  std::vector<SplitAssignment> out;
  std::vector<std::string> f;
  auto as_int = [&](const std::string& text) {
    auto v = csv::parse_int(text);
    if (!v) throw Error(ErrorCode::kSchema, path.string() + ":" +
                                                std::to_string(reader.line_number()) +
                                                ": expected integer");
    return *v;
  };
  while (reader.next(f)) {
    SplitAssignment a;
    a.key = {as_int(f[c[0]]), f[c[1]], f[c[2]]};
    if (f[c[3]] == "train") a.partition = Partition::kTrain;
    else if (f[c[3]] == "test") a.partition = Partition::kTest;
    else throw Error(ErrorCode::kSchema, path.string() + ": bad partition '" + f[c[3]] + "'");
    a.event = as_int(f[c[4]]) != 0;
    a.bucket = static_cast<int>(as_int(f[c[5]]));
    a.time_for_split = static_cast<int>(as_int(f[c[6]]));
    a.fold = static_cast<int>(as_int(f[c[7]]));
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace dtsurv
