#include "dtsurv/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace dtsurv::kernels {

double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

inline double row_score(const EncodedRows& rows, std::size_t r, std::span<const double> theta) {
  double s = theta[0];
  const double* num = rows.numeric.data() + r * rows.n_numeric;
  for (std::size_t j = 0; j < rows.n_numeric; ++j) s += theta[1 + j] * num[j];
  const std::int32_t* hot = rows.onehot.data() + r * rows.n_categorical;
  for (std::size_t c = 0; c < rows.n_categorical; ++c) {
    if (hot[c] >= 0) s += theta[1 + static_cast<std::size_t>(hot[c])];
  }
  return s;
}

// Accumulates rows [begin, end) into loss/grad/hess (upper triangle only).
void accumulate(const EncodedRows& rows, std::span<const std::uint8_t> y,
                std::span<const double> weights, std::span<const double> theta,
                bool want_hessian, std::size_t begin, std::size_t end, double& loss,
                double* grad, double* hess) {
  const std::size_t d = 1 + rows.width;
  std::vector<std::size_t> idx(1 + rows.n_numeric + rows.n_categorical);
  std::vector<double> val(idx.size());
  for (std::size_t r = begin; r < end; ++r) {
    std::size_t nnz = 0;
    idx[nnz] = 0;
    val[nnz++] = 1.0;
    const double* num = rows.numeric.data() + r * rows.n_numeric;
    for (std::size_t j = 0; j < rows.n_numeric; ++j) {
      idx[nnz] = 1 + j;
      val[nnz++] = num[j];
    }
    const std::int32_t* hot = rows.onehot.data() + r * rows.n_categorical;
    for (std::size_t c = 0; c < rows.n_categorical; ++c) {
      if (hot[c] >= 0) {
        idx[nnz] = 1 + static_cast<std::size_t>(hot[c]);
        val[nnz++] = 1.0;
      }
    }
    double s = 0.0;
    for (std::size_t a = 0; a < nnz; ++a) s += theta[idx[a]] * val[a];
    const double w = weights[r];
    const double label = y[r] ? 1.0 : 0.0;
    const double p = sigmoid(s);
    loss += w * (log1pexp(s) - label * s);
    const double g = w * (p - label);
    for (std::size_t a = 0; a < nnz; ++a) grad[idx[a]] += g * val[a];
    if (want_hessian) {
      const double h = w * p * (1.0 - p);
      for (std::size_t a = 0; a < nnz; ++a) {
        const double ha = h * val[a];
        double* hrow = hess + idx[a] * d;
        for (std::size_t b = a; b < nnz; ++b) hrow[idx[b]] += ha * val[b];
      }
    }
  }
}

void mirror_upper(std::vector<double>& hess, std::size_t d) {
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < a; ++b) hess[a * d + b] = hess[b * d + a];
}

double segment_product(std::span<const double> hazards, std::size_t begin, std::size_t end,
                       std::span<double> out) {
  double s = 1.0;
  for (std::size_t r = begin; r < end; ++r) {
    s *= 1.0 - std::min(hazards[r], kMaxHazard);
    out[r] = s;
  }
  return s;
}

}  // namespace

namespace serial {

void linear_scores(const EncodedRows& rows, std::span<const double> theta, std::span<double> out) {
  for (std::size_t r = 0; r < rows.n_rows; ++r) out[r] = row_score(rows, r, theta);
}

void logistic_terms(const EncodedRows& rows, std::span<const std::uint8_t> y,
                    std::span<const double> weights, std::span<const double> theta,
                    bool want_hessian, LogisticTerms& out) {
  const std::size_t d = 1 + rows.width;
  out.loss = 0.0;
  out.gradient.assign(d, 0.0);
  out.hessian.assign(want_hessian ? d * d : 0, 0.0);
  accumulate(rows, y, weights, theta, want_hessian, 0, rows.n_rows, out.loss,
             out.gradient.data(), out.hessian.data());
  if (want_hessian) mirror_upper(out.hessian, d);
}

void segment_survival(std::span<const double> hazards, std::span<const std::size_t> offsets,
                      std::span<double> out) {
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    segment_product(hazards, offsets[i], offsets[i + 1], out);
  }
}

}  // namespace serial

namespace parallel {

void linear_scores(const EncodedRows& rows, std::span<const double> theta, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(rows.n_rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    out[static_cast<std::size_t>(r)] = row_score(rows, static_cast<std::size_t>(r), theta);
  }
}

void logistic_terms(const EncodedRows& rows, std::span<const std::uint8_t> y,
                    std::span<const double> weights, std::span<const double> theta,
                    bool want_hessian, LogisticTerms& out) {
  const std::size_t d = 1 + rows.width;
  const std::size_t n_blocks = (rows.n_rows + kBlockRows - 1) / kBlockRows;
  std::vector<double> block_loss(n_blocks, 0.0);
  std::vector<double> block_grad(n_blocks * d, 0.0);
  std::vector<double> block_hess(want_hessian ? n_blocks * d * d : 0, 0.0);

  const auto nb = static_cast<std::int64_t>(n_blocks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t b = 0; b < nb; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const std::size_t begin = ub * kBlockRows;
    const std::size_t end = std::min(rows.n_rows, begin + kBlockRows);
    accumulate(rows, y, weights, theta, want_hessian, begin, end, block_loss[ub],
               block_grad.data() + ub * d,
               want_hessian ? block_hess.data() + ub * d * d : nullptr);
  }

  out.loss = 0.0;
  out.gradient.assign(d, 0.0);
  out.hessian.assign(want_hessian ? d * d : 0, 0.0);
  // Block order is fixed, so the sum is the same for any thread count.
  for (std::size_t b = 0; b < n_blocks; ++b) {
    out.loss += block_loss[b];
    const double* g = block_grad.data() + b * d;
    for (std::size_t k = 0; k < d; ++k) out.gradient[k] += g[k];
    if (want_hessian) {
      const double* h = block_hess.data() + b * d * d;
      for (std::size_t k = 0; k < d * d; ++k) out.hessian[k] += h[k];
    }
  }
  if (want_hessian) mirror_upper(out.hessian, d);
}

void segment_survival(std::span<const double> hazards, std::span<const std::size_t> offsets,
                      std::span<double> out) {
  const auto n = static_cast<std::int64_t>(offsets.size()) - 1;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    segment_product(hazards, offsets[ui], offsets[ui + 1], out);
  }
}

}  // namespace parallel
}  // namespace dtsurv::kernels
