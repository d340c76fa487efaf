#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtsurv/censoring.hpp"
#include "dtsurv/metrics.hpp"
#include "dtsurv/person_period.hpp"

namespace dtsurv {

// Per-enrollment endpoint used by horizon metrics.
struct EndpointLabels {
  std::vector<std::uint8_t> event;
  std::vector<int> time;  // event week for events, last observed week otherwise
};

EndpointLabels primary_labels(const PersonPeriodTable& table);

// Graf-style horizon labels. Events at or before T take 1/G_i(t_event),
// subjects observed event-free through T take 1/G_i(T), subjects censored
// before T take weight 0. Weights are floored and capped.
std::vector<HorizonLabel> horizon_labels(const PersonPeriodTable& table,
                                         std::span<const double> survival_rows,
                                         std::span<const double> g_rows,
                                         const EndpointLabels& endpoint, int T,
                                         double g_min, double cap);

std::vector<ConcordanceSubject> concordance_subjects(
    const PersonPeriodTable& table, std::span<const double> survival_rows,
    std::span<const double> g_rows, const EndpointLabels& endpoint, int T,
    double g_min, double cap);

struct HorizonMetrics {
  int T = 0;
  BrierResult brier;
  double ibs = 0.0;            // over BS(0..T), (1/n) normalization
  double ibs_weight_normalized = 0.0;
  double cindex = 0.0;         // NaN when no comparable pair
  std::size_t comparable_pairs = 0;
  std::size_t events_by_T = 0;
};

HorizonMetrics evaluate_horizon(const PersonPeriodTable& table,
                                std::span<const double> survival_rows,
                                std::span<const double> g_rows,
                                const EndpointLabels& endpoint, int T,
                                double g_min, double cap);

}  // namespace dtsurv
