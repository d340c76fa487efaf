#include "dtsurv/evaluation.hpp"

#include <algorithm>
#include <limits>

#include "dtsurv/error.hpp"
#include "dtsurv/hazard.hpp"

namespace dtsurv {

namespace {

double g_at(const PersonPeriodTable& table, std::span<const double> g_rows, std::size_t i,
            int t) {
  const std::size_t begin = table.begin_row(i);
  const std::size_t len = table.end_row(i) - begin;
  return g_rows[begin + std::min<std::size_t>(static_cast<std::size_t>(std::max(t, 0)), len - 1)];
}

// Week at which subject i's horizon weight is read, or -1 when it is
// censored before T.
int weight_week(const EndpointLabels& endpoint, std::size_t i, int T) {
  if (endpoint.event[i] && endpoint.time[i] <= T) return endpoint.time[i];
  if (endpoint.time[i] >= T) return T;
  return -1;
}

void check_sizes(const PersonPeriodTable& table, std::span<const double> survival_rows,
                 std::span<const double> g_rows, const EndpointLabels& endpoint) {
  if (survival_rows.size() != table.rows() || g_rows.size() != table.rows() ||
      endpoint.event.size() != table.size() || endpoint.time.size() != table.size()) {
    throw Error(ErrorCode::kContract, "evaluation inputs do not match the table");
  }
}

}  // namespace

EndpointLabels primary_labels(const PersonPeriodTable& table) {
  EndpointLabels out;
  out.event.reserve(table.size());
  out.time.reserve(table.size());
  for (const auto& e : table.enrollments) {
    out.event.push_back(e.event ? 1 : 0);
    out.time.push_back(e.t_final);
  }
  return out;
}

std::vector<HorizonLabel> horizon_labels(const PersonPeriodTable& table,
                                         std::span<const double> survival_rows,
                                         std::span<const double> g_rows,
                                         const EndpointLabels& endpoint, int T, double g_min,
                                         double cap) {
  check_sizes(table, survival_rows, g_rows, endpoint);
  std::vector<HorizonLabel> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    HorizonLabel& l = out[i];
    l.y = endpoint.event[i] && endpoint.time[i] <= T ? 1 : 0;
    l.p = 1.0 - survival_at(table, survival_rows, i, T);
    const int at = weight_week(endpoint, i, T);
    l.w = at < 0 ? 0.0 : ipcw_weight(g_at(table, g_rows, i, at), g_min, cap).weight;
  }
  return out;
}

std::vector<ConcordanceSubject> concordance_subjects(const PersonPeriodTable& table,
                                                     std::span<const double> survival_rows,
                                                     std::span<const double> g_rows,
                                                     const EndpointLabels& endpoint, int T,
                                                     double g_min, double cap) {
  check_sizes(table, survival_rows, g_rows, endpoint);
  std::vector<ConcordanceSubject> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto& s = out[i];
    s.risk = 1.0 - survival_at(table, survival_rows, i, T);
    s.time = endpoint.time[i];
    s.event = endpoint.event[i] != 0;
    s.weight = s.event ? ipcw_weight(g_at(table, g_rows, i, s.time), g_min, cap).weight : 1.0;
  }
  return out;
}

HorizonMetrics evaluate_horizon(const PersonPeriodTable& table,
                                std::span<const double> survival_rows,
                                std::span<const double> g_rows, const EndpointLabels& endpoint,
                                int T, double g_min, double cap) {
  if (T < 0) throw Error(ErrorCode::kArgument, "horizon must be >= 0");
  HorizonMetrics m;
  m.T = T;
  const auto labels = horizon_labels(table, survival_rows, g_rows, endpoint, T, g_min, cap);
  m.brier = brier_ipcw(labels);
  for (const auto& l : labels) m.events_by_T += l.y;

  std::vector<double> bs(static_cast<std::size_t>(T) + 1), bsw(bs.size());
  for (int t = 0; t <= T; ++t) {
    const auto r = brier_ipcw(horizon_labels(table, survival_rows, g_rows, endpoint, t, g_min, cap));
    bs[static_cast<std::size_t>(t)] = r.mean;
    bsw[static_cast<std::size_t>(t)] = r.weight_normalized;
  }
  m.ibs = integrated_brier(bs);
  m.ibs_weight_normalized = integrated_brier(bsw);

  try {
    const auto c = cindex_discrete(
        concordance_subjects(table, survival_rows, g_rows, endpoint, T, g_min, cap), T);
    m.cindex = c.cindex;
    m.comparable_pairs = c.comparable_pairs;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefinedMetric) throw;
    m.cindex = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

}  // namespace dtsurv
