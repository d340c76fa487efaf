#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dtsurv/evaluation.hpp"

namespace dtsurv {

// Composite endpoint (Fail or Withdrawn): primary events keep their week,
// Fail enrollments become events at their last observed week.
EndpointLabels composite_labels(const PersonPeriodTable& table);

struct EndpointSensitivityRow {
  std::string endpoint;  // "primary" | "composite"
  std::size_t n_events = 0;
  HorizonMetrics at_T_policy;
  HorizonMetrics at_T_eval_metrics;
};

// Re-evaluates the same risk scores under both endpoints; the censoring
// weights come from the primary censoring model in both runs.
std::vector<EndpointSensitivityRow> endpoint_sensitivity(
    const PersonPeriodTable& test, std::span<const double> survival_rows,
    std::span<const double> g_rows, const HorizonConfig& horizons);

}  // namespace dtsurv
