#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtsurv/codec.hpp"

// Hot loops of the pipeline, each in two flavours: a straight serial loop kept
// as the reference, and an OpenMP version. The OpenMP versions reduce over
// fixed-size row blocks and combine block partials in block order, so their
// output does not depend on the thread count.
namespace dtsurv::kernels {

inline constexpr std::size_t kBlockRows = 4096;

// theta = [intercept, coefficients...]; length 1 + rows.width.
struct LogisticTerms {
  double loss = 0.0;              // sum_i w_i * logloss_i
  std::vector<double> gradient;   // d loss / d theta
  std::vector<double> hessian;    // dense (1+width)^2, row-major; empty if not requested
};

namespace serial {
void linear_scores(const EncodedRows& rows, std::span<const double> theta,
                   std::span<double> out);
void logistic_terms(const EncodedRows& rows, std::span<const std::uint8_t> y,
                    std::span<const double> weights,
                    std::span<const double> theta, bool want_hessian,
                    LogisticTerms& out);
// Inclusive cumulative product of (1 - h) over each segment
// [offsets[i], offsets[i+1]).
void segment_survival(std::span<const double> hazards,
                      std::span<const std::size_t> offsets,
                      std::span<double> out);
}  // namespace serial

namespace parallel {
void linear_scores(const EncodedRows& rows, std::span<const double> theta,
                   std::span<double> out);
void logistic_terms(const EncodedRows& rows, std::span<const std::uint8_t> y,
                    std::span<const double> weights,
                    std::span<const double> theta, bool want_hessian,
                    LogisticTerms& out);
void segment_survival(std::span<const double> hazards,
                      std::span<const std::size_t> offsets,
                      std::span<double> out);
}  // namespace parallel

// Numerically stable log(1 + exp(x)).
double log1pexp(double x);
double sigmoid(double x);

inline constexpr double kMaxHazard = 1.0 - 1e-12;

}  // namespace dtsurv::kernels
