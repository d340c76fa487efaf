#include "dtsurv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dtsurv/error.hpp"

namespace dtsurv {

double auc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw Error(ErrorCode::kArgument, "auc: size mismatch");
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k;
    while (end < n && scores[order[end]] == scores[order[k]]) ++end;
    const double midrank = 0.5 * (double(k + 1) + double(end));
    for (std::size_t m = k; m < end; ++m) {
      if (labels[order[m]]) {
        rank_sum += midrank;
        n_pos += 1.0;
      }
    }
    k = end;
  }
  const double n_neg = double(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kUndefinedMetric, "auc needs both classes");
  }
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

BrierResult brier_ipcw(std::span<const HorizonLabel> labels) {
  if (labels.empty()) throw Error(ErrorCode::kEmptyInput, "brier: no subjects");
  double num = 0.0, wsum = 0.0;
  for (const auto& l : labels) {
    const double r = double(l.y) - l.p;
    num += l.w * r * r;
    wsum += l.w;
  }
  BrierResult out;
  out.mean = num / double(labels.size());
  out.weight_normalized = wsum > 0 ? num / wsum : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double integrated_brier(std::span<const double> per_week_scores) {
  if (per_week_scores.empty()) throw Error(ErrorCode::kEmptyInput, "ibs: no scores");
  double s = 0.0;
  for (double v : per_week_scores) s += v;
  return s / double(per_week_scores.size());
}

ConcordanceResult cindex_discrete(std::span<const ConcordanceSubject> subjects, int T) {
  double num = 0.0, den = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& a = subjects[i];
    if (!a.event || a.time > T) continue;
    const double w = a.weight * a.weight;
    for (std::size_t j = 0; j < subjects.size(); ++j) {
      if (j == i) continue;
      const auto& b = subjects[j];
      const bool comparable = b.time > a.time || (b.time == a.time && !b.event);
      if (!comparable) continue;
      ++pairs;
      den += w;
      if (a.risk > b.risk) {
        num += w;
      } else if (a.risk == b.risk) {
        num += 0.5 * w;
      }
    }
  }
  if (pairs == 0 || den <= 0.0) {
    throw Error(ErrorCode::kUndefinedMetric, "c-index: no comparable pairs");
  }
  return {num / den, den, pairs};
}

std::vector<CalibrationBin> calibration_bins(std::span<const double> predictions,
                                             std::span<const std::uint8_t> labels, int bins) {
  if (bins < 1) throw Error(ErrorCode::kArgument, "calibration bins must be >= 1");
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::kArgument, "calibration: size mismatch");
  }
  std::vector<CalibrationBin> out(static_cast<std::size_t>(bins));
  std::vector<double> psum(out.size(), 0.0);
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b].lower = double(b) / bins;
    out[b].upper = double(b + 1) / bins;
  }
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double p = predictions[k];
    auto b = static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor(p * bins)), 0, bins - 1));
    ++out[b].n;
    out[b].events += labels[k] ? 1 : 0;
    psum[b] += p;
  }
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (out[b].n == 0) continue;
    out[b].mean_prediction = psum[b] / double(out[b].n);
    out[b].event_rate = double(out[b].events) / double(out[b].n);
  }
  return out;
}

double ece(std::span<const double> predictions, std::span<const std::uint8_t> labels, int bins) {
  if (predictions.empty()) return 0.0;
  double e = 0.0;
  for (const auto& b : calibration_bins(predictions, labels, bins)) {
    if (b.n == 0) continue;
    e += double(b.n) / double(predictions.size()) * std::abs(b.mean_prediction - b.event_rate);
  }
  return e;
}

double brier_unweighted(std::span<const double> predictions,
                        std::span<const std::uint8_t> labels) {
  if (predictions.empty()) throw Error(ErrorCode::kEmptyInput, "brier: no rows");
  double s = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double r = predictions[k] - (labels[k] ? 1.0 : 0.0);
    s += r * r;
  }
  return s / double(predictions.size());
}

std::vector<GroupDiagnostics> by_group_diagnostics(std::span<const std::string> groups,
                                                   std::span<const double> predictions,
                                                   std::span<const std::uint8_t> labels,
                                                   int bins) {
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t k = 0; k < groups.size(); ++k) members[groups[k]].push_back(k);
  std::vector<GroupDiagnostics> out;
  for (const auto& [level, idx] : members) {
    std::vector<double> p(idx.size());
    std::vector<std::uint8_t> y(idx.size());
    for (std::size_t m = 0; m < idx.size(); ++m) {
      p[m] = predictions[idx[m]];
      y[m] = labels[idx[m]];
    }
    GroupDiagnostics g;
    g.group = level;
    g.rows = idx.size();
    for (auto v : y) g.events += v ? 1 : 0;
    try {
      g.auc = auc(y, p);
    } catch (const Error&) {
      g.auc = std::numeric_limits<double>::quiet_NaN();
    }
    g.brier = brier_unweighted(p, y);
    g.ece = ece(p, y, bins);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace dtsurv
