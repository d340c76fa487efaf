#include "dtsurv/logistic.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "dtsurv/error.hpp"
#include "dtsurv/kernels.hpp"

namespace dtsurv {

namespace {

void terms(const EncodedRows& rows, std::span<const std::uint8_t> y,
           std::span<const double> w, std::span<const double> theta, bool hessian,
           bool parallel, kernels::LogisticTerms& out) {
  if (parallel) {
    kernels::parallel::logistic_terms(rows, y, w, theta, hessian, out);
  } else {
    kernels::serial::logistic_terms(rows, y, w, theta, hessian, out);
  }
}

double penalty(std::span<const double> theta, double lambda) {
  double ss = 0.0;
  for (std::size_t k = 1; k < theta.size(); ++k) ss += theta[k] * theta[k];
  return 0.5 * lambda * ss;
}

void add_penalty_gradient(std::vector<double>& grad, std::span<const double> theta, double lambda) {
  for (std::size_t k = 1; k < theta.size(); ++k) grad[k] += lambda * theta[k];
}

double norm2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

double penalized_objective(const EncodedRows& rows, std::span<const std::uint8_t> y,
                           std::span<const double> weights, std::span<const double> theta,
                           double lambda) {
  kernels::LogisticTerms t;
  kernels::serial::logistic_terms(rows, y, weights, theta, false, t);
  return t.loss + penalty(theta, lambda);
}

std::vector<double> penalized_gradient(const EncodedRows& rows, std::span<const std::uint8_t> y,
                                       std::span<const double> weights,
                                       std::span<const double> theta, double lambda) {
  kernels::LogisticTerms t;
  kernels::serial::logistic_terms(rows, y, weights, theta, false, t);
  add_penalty_gradient(t.gradient, theta, lambda);
  return t.gradient;
}

LogisticFit fit_weighted_logistic(const EncodedRows& rows, std::span<const std::uint8_t> y,
                                  std::span<const double> weights,
                                  const LogisticOptions& options) {
  if (rows.width == 0) {
    throw Error(ErrorCode::kTraining, "empty design: no features to fit");
  }
  if (rows.n_rows == 0) throw Error(ErrorCode::kTraining, "no training rows");
  if (!(options.lambda >= 0.0)) throw Error(ErrorCode::kArgument, "lambda must be >= 0");
  const std::size_t d = 1 + rows.width;

  LogisticFit fit;
  fit.theta.assign(d, 0.0);
  kernels::LogisticTerms cur;
  terms(rows, y, weights, fit.theta, true, options.parallel, cur);

  double g0 = -1.0;
  for (int it = 0;; ++it) {
    const double obj = cur.loss + penalty(fit.theta, options.lambda);
    std::vector<double> grad = cur.gradient;
    add_penalty_gradient(grad, fit.theta, options.lambda);
    const double gnorm = norm2(grad);
    if (!std::isfinite(obj) || !std::isfinite(gnorm)) {
      throw Error(ErrorCode::kTraining, "non-finite objective during fitting");
    }
    if (g0 < 0.0) g0 = gnorm;
    fit.objective = obj;
    fit.gradient_norm = gnorm;
    fit.iterations = it;
    if (gnorm <= options.tolerance * std::max(1.0, g0)) return fit;
    if (it >= options.max_iter) {
      throw Error(ErrorCode::kConvergence,
                  "no convergence after " + std::to_string(it) +
                      " iterations; gradient norm " + std::to_string(gnorm));
    }

    Eigen::MatrixXd H = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                       Eigen::RowMajor>>(cur.hessian.data(), d, d);
    for (std::size_t k = 1; k < d; ++k) H(k, k) += options.lambda;
    Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(grad.data(), d);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd dir = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !dir.allFinite() || g.dot(dir) >= 0.0) {
      dir = -g;  // fall back to steepest descent
    }
    const double slope = g.dot(dir);

    std::vector<double> cand(d);
    double step = 1.0;
    kernels::LogisticTerms trial;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      for (std::size_t k = 0; k < d; ++k) cand[k] = fit.theta[k] + step * dir[static_cast<Eigen::Index>(k)];
      terms(rows, y, weights, cand, false, options.parallel, trial);
      const double cand_obj = trial.loss + penalty(cand, options.lambda);
      if (std::isfinite(cand_obj) && cand_obj <= obj + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      // Near the optimum the objective no longer resolves the decrease; a
      // step that keeps it flat to rounding and shrinks the gradient is taken.
      if (std::isfinite(cand_obj) && std::abs(cand_obj - obj) <= 1e-13 * std::max(1.0, std::abs(obj))) {
        std::vector<double> cg = trial.gradient;
        add_penalty_gradient(cg, cand, options.lambda);
        if (norm2(cg) < 0.5 * gnorm) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (accepted && cand == fit.theta) accepted = false;  // step below resolution
    if (!accepted) {
      // No decrease is representable; the iterate sits on the floating-point
      // floor of the objective.
      if (gnorm <= 1e3 * options.tolerance * std::max(1.0, g0)) return fit;
      throw Error(ErrorCode::kConvergence,
                  "line search failed; gradient norm " + std::to_string(gnorm));
    }
    fit.theta = cand;
    terms(rows, y, weights, fit.theta, true, options.parallel, cur);
  }
}

double SigmoidCalibration::apply(double score) const {
  return kernels::sigmoid(-(a * score + b));
}

SigmoidCalibration fit_sigmoid(std::span<const double> scores, std::span<const std::uint8_t> y) {
  double n_pos = 0, n_neg = 0;
  for (auto v : y) (v ? n_pos : n_neg) += 1.0;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kCalibration, "sigmoid calibration needs both classes");
  }
  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  const std::size_t n = scores.size();
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) target[i] = y[i] ? hi : lo;

  // Negative log-likelihood with f = a*s + b and p = 1/(1+exp(f)):
  //   t*f + log(1 + exp(-f))  ==  (t-1)*f + log(1 + exp(f)).
  auto nll = [&](double a, double b) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = a * scores[i] + b;
      v += f >= 0 ? target[i] * f + std::log1p(std::exp(-f))
                  : (target[i] - 1.0) * f + std::log1p(std::exp(f));
    }
    return v;
  };

  double a = 0.0;
  double b = std::log((n_neg + 1.0) / (n_pos + 1.0));
  double fval = nll(a, b);
  constexpr double kSigma = 1e-12;
  for (int it = 0; it < 100; ++it) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = a * scores[i] + b;
      double p, q;  // p = P(y=1) = 1/(1+e^f), q = 1 - p
      if (f >= 0) {
        const double e = std::exp(-f);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(f);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = p * q;
      h11 += scores[i] * scores[i] * d2;
      h22 += d2;
      h21 += scores[i] * d2;
      const double d1 = target[i] - p;
      g1 += scores[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 * std::max(1.0, double(n) * 1e-3) &&
        std::abs(g2) < 1e-5 * std::max(1.0, double(n) * 1e-3)) {
      break;
    }
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = nll(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return {a, b};
}

}  // namespace dtsurv
