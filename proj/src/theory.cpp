#include "lowdose/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <numbers>
#include <stdexcept>

namespace lowdose {

void BoundConstants::validate() const {
  if (!(C_beta > 0.0) || !(C_hat_beta > 0.0)) {
    throw std::invalid_argument("BoundConstants: C_beta and C_hat_beta must be > 0");
  }
  if (!(beta > 1.0)) throw std::invalid_argument("BoundConstants: beta must be > 1");
}

namespace {

Matrix<double> rank_one_plus_identity(const Vec& x, double outer_coeff, double diag_coeff) {
  Matrix<double> out = outer_coeff * (x * x.transpose());
  out.diagonal().array() += diag_coeff;
  return out;
}

void require_unit(const char* name, const Vec& v) {
  if (std::abs(v.norm() - 1.0) > 1e-8) {
    throw std::invalid_argument(std::string("lemma1_correlation: ") + name + " must be a unit vector");
  }
}

}  // namespace

Matrix<double> expected_Y_poisson(const Vec& x) {
  return rank_one_plus_identity(x, 2.0, x.squaredNorm());
}

Matrix<double> expected_Y_poisson(const SignalVector& s) { return expected_Y_poisson(s.x); }

Matrix<double> expected_Y_bernoulli(const Vec& x) {
  const double s = 2.0 * x.squaredNorm() + 1.0;
  return rank_one_plus_identity(x, 2.0 / std::pow(s, 1.5), 1.0 - 1.0 / std::sqrt(s));
}

Matrix<double> expected_Y_bernoulli(const SignalVector& s) { return expected_Y_bernoulli(s.x); }

double lemma1_correlation(const Vec& u, const Vec& v, const Vec& w) {
  require_same_size("lemma1_correlation", u.size(), v.size());
  require_same_size("lemma1_correlation", u.size(), w.size());
  require_unit("u", u);
  require_unit("v", v);
  require_unit("w", w);
  const double uv = u.dot(v);
  const double uw = u.dot(w);
  const double den = std::sqrt(1.0 - uv * uv) * std::sqrt(1.0 - uw * uw);
  if (!(den > 1e-12)) throw std::invalid_argument("lemma1_correlation: v or w is collinear with u");
  const double rho = (v.dot(w) - uv * uw) / den;
  return std::clamp(rho, -1.0, 1.0);
}

double gaussian_exp_moment(double alpha, int order) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("gaussian_exp_moment: alpha must be >= 0");
  const double s = 2.0 * alpha + 1.0;
  switch (order) {
    case 0: return 1.0 / std::sqrt(s);
    case 2: return 1.0 / std::pow(s, 1.5);
    case 4: return 3.0 / std::pow(s, 2.5);
    default: throw std::invalid_argument("gaussian_exp_moment: order must be 0, 2 or 4");
  }
}

double fourth_moment_poisson(double alpha, double rho) {
  const double r2 = rho * rho;
  const double a2 = alpha * alpha;
  return 24.0 * a2 * r2 * r2 + 72.0 * a2 * r2 + 9.0 * a2 + 12.0 * alpha * r2 + 3.0 * alpha;
}

double second_moment_poisson(double alpha, double rho) { return 2.0 * alpha * rho * rho + alpha; }

double fourth_moment_bernoulli(double alpha, double rho) {
  const double r2 = rho * rho;
  const double q2 = 1.0 - r2;
  return r2 * r2 * (3.0 - gaussian_exp_moment(alpha, 4)) +
         6.0 * r2 * q2 * (1.0 - gaussian_exp_moment(alpha, 2)) +
         q2 * q2 * 3.0 * (1.0 - gaussian_exp_moment(alpha, 0));
}

double second_moment_bernoulli(double alpha, double rho) {
  const double r2 = rho * rho;
  return r2 * (1.0 - gaussian_exp_moment(alpha, 2)) + (1.0 - r2) * (1.0 - gaussian_exp_moment(alpha, 0));
}

VarianceProxy variance_proxy(NoiseModel model, double alpha, double rho, std::int64_t m) {
  if (m < 1) throw std::invalid_argument("variance_proxy: m must be >= 1");
  if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("variance_proxy: |rho| must be <= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("variance_proxy: alpha must be >= 0");
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  const double r2 = rho * rho;
  VarianceProxy v;
  if (model == NoiseModel::poisson) {
    const double a2 = alpha * alpha;
    const double bracket = 20.0 * a2 * r2 * r2 + 68.0 * a2 * r2 + 8.0 * a2 + 12.0 * alpha * r2 + 3.0 * alpha;
    v.exact = inv_sqrt_m * std::sqrt(bracket);
    v.bound = inv_sqrt_m * (10.0 * alpha + 4.0 * std::sqrt(alpha));
  } else {
    // Grouped by powers of s = (2 alpha + 1)^{1/2}. The last group is (3 - 3/s) - (1 - 1/s)^2.
    const double s = std::sqrt(2.0 * alpha + 1.0);
    const double q2 = 1.0 - r2;
    const double bracket =
        r2 * r2 * (2.0 - 3.0 / std::pow(s, 5) + 2.0 / std::pow(s, 3) - 1.0 / std::pow(s, 6)) +
        2.0 * r2 * q2 * (2.0 - 2.0 / std::pow(s, 3) + 1.0 / s - 1.0 / std::pow(s, 4)) +
        q2 * q2 * (2.0 - 1.0 / s - 1.0 / (s * s));
    v.exact = inv_sqrt_m * std::sqrt(std::max(bracket, 0.0));
    v.bound = std::sqrt(12.0 / static_cast<double>(m));
  }
  return v;
}

TailThreshold lemma3_threshold(double alpha, double beta, std::int64_t m) {
  if (m < 2) throw std::invalid_argument("lemma3_threshold: m must be >= 2");
  if (!(beta > 0.0)) throw std::invalid_argument("lemma3_threshold: beta must be > 0");
  TailThreshold t;
  t.tau = std::max(std::numbers::e * std::numbers::e * alpha, beta + 1.0);
  t.threshold = t.tau * std::log(static_cast<double>(m));
  t.failure_bound = 3.0 * std::pow(static_cast<double>(m), -beta);
  return t;
}

namespace {

double rate(std::int64_t n, std::int64_t m) {
  const double dn = static_cast<double>(n);
  return std::sqrt(std::log(dn)) * std::sqrt(dn / static_cast<double>(m));
}

void check_sizes(const char* where, std::int64_t n, std::int64_t m) {
  if (n < 2) throw std::invalid_argument(std::string(where) + ": n must be >= 2");
  if (m < 1) throw std::invalid_argument(std::string(where) + ": m must be >= 1");
}

bool below_mnlogn(std::int64_t n, std::int64_t m) {
  const double dn = static_cast<double>(n);
  return static_cast<double>(m) < dn * std::log(dn);
}

}  // namespace

DeviationBound deviation_bound(NoiseModel model, std::int64_t n, std::int64_t m, double alpha,
                               const BoundConstants& k) {
  check_sizes("deviation_bound", n, m);
  k.validate();
  DeviationBound b;
  b.below_mnlogn = below_mnlogn(n, m);
  if (model == NoiseModel::poisson) {
    b.value = k.C_beta * (alpha + k.C_hat_beta) * std::log(static_cast<double>(m)) * rate(n, m);
  } else {
    b.value = k.C_beta * rate(n, m);
  }
  return b;
}

DeviationBound theorem1_bound(NoiseModel model, std::int64_t n, std::int64_t m, double alpha,
                              const BoundConstants& k) {
  check_sizes("theorem1_bound", n, m);
  k.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("theorem1_bound: alpha must be > 0");
  DeviationBound b;
  b.below_mnlogn = below_mnlogn(n, m);
  if (model == NoiseModel::poisson) {
    b.value = 2.0 * k.C_beta * (1.0 + k.C_hat_beta / alpha) * std::log(static_cast<double>(m)) * rate(n, m);
  } else {
    b.value = 2.0 * k.C_beta * std::pow(2.0 * alpha + 1.0, 1.5) / alpha * rate(n, m);
  }
  return b;
}

double dose_factor(NoiseModel model, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("dose_factor: alpha must be > 0");
  if (model == NoiseModel::poisson) {
    const double f = 1.0 + 1.0 / alpha;
    return f * f;
  }
  return std::pow(2.0 * alpha + 1.0, 3) / (alpha * alpha);
}

}  // namespace lowdose
