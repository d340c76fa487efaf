#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtsurv/codec.hpp"

namespace dtsurv {

struct LogisticOptions {
  double lambda = 1.0;      // L2 strength on the coefficients, not the intercept
  int max_iter = 100;
  double tolerance = 1e-6;  // on ||grad|| relative to max(1, ||grad_0||)
  bool parallel = true;
};

struct LogisticFit {
  std::vector<double> theta;  // [intercept, coefficients...]
  double objective = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

// Objective: sum_i w_i * logloss(y_i, theta'x_i) + lambda/2 * ||beta||^2.
double penalized_objective(const EncodedRows& rows,
                           std::span<const std::uint8_t> y,
                           std::span<const double> weights,
                           std::span<const double> theta, double lambda);
std::vector<double> penalized_gradient(const EncodedRows& rows,
                                       std::span<const std::uint8_t> y,
                                       std::span<const double> weights,
                                       std::span<const double> theta,
                                       double lambda);

// Damped Newton iterations (Cholesky/LDLT solve, backtracking line search).
// Throws ErrorCode::kConvergence, carrying the final gradient norm, when the
// tolerance is not reached within max_iter.
LogisticFit fit_weighted_logistic(const EncodedRows& rows,
                                  std::span<const std::uint8_t> y,
                                  std::span<const double> weights,
                                  const LogisticOptions& options);

// Two-parameter sigmoid map p = 1 / (1 + exp(a*s + b)) fitted by Newton's
// method on the smoothed Platt targets.
struct SigmoidCalibration {
  double a = -1.0;
  double b = 0.0;

  double apply(double score) const;
};

SigmoidCalibration fit_sigmoid(std::span<const double> scores,
                               std::span<const std::uint8_t> y);

}  // namespace dtsurv
