#include "dtsurv/endpoint.hpp"

namespace dtsurv {

EndpointLabels composite_labels(const PersonPeriodTable& table) {
  EndpointLabels out = primary_labels(table);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const Enrollment& e = table.enrollments[i];
    if (!e.event && e.final_result == FinalResult::kFail) {
      out.event[i] = 1;
      out.time[i] = e.t_last_obs;
    }
  }
  return out;
}

std::vector<EndpointSensitivityRow> endpoint_sensitivity(const PersonPeriodTable& test,
                                                         std::span<const double> survival_rows,
                                                         std::span<const double> g_rows,
                                                         const HorizonConfig& horizons) {
  std::vector<EndpointSensitivityRow> out;
  const std::pair<const char*, EndpointLabels> runs[] = {
      {"primary", primary_labels(test)},
      {"composite", composite_labels(test)},
  };
  for (const auto& [name, labels] : runs) {
    EndpointSensitivityRow row;
    row.endpoint = name;
    for (auto v : labels.event) row.n_events += v;
    row.at_T_policy = evaluate_horizon(test, survival_rows, g_rows, labels, horizons.T_policy,
                                       horizons.g_min, horizons.weight_cap);
    row.at_T_eval_metrics =
        evaluate_horizon(test, survival_rows, g_rows, labels, horizons.T_eval_metrics,
                         horizons.g_min, horizons.weight_cap);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace dtsurv
