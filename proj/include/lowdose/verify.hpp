#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "lowdose/theory.hpp"

namespace lowdose {

/// One row of the oracle report: a closed form compared against an independent route
/// (quadrature, Monte Carlo, or a parameter scan).
struct CheckResult {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// Frobenius distance between the average of `trials` independent Y (fixed random x with
/// ||x||^2 = alpha) and the closed-form E[Y]; passes at <= tolerance.
CheckResult check_expected_Y(NoiseModel model, std::int64_t n, std::int64_t m, double alpha, int trials,
                             double tolerance, std::uint64_t seed);

/// Closed-form E[g^k exp(-alpha g^2)] against adaptive Gauss-Kronrod quadrature, one row per
/// (alpha, k) with alpha in {0, 0.5, 1, 10} and k in {0, 2, 4}.
std::vector<CheckResult> check_gaussian_exp_moments(double tolerance = 1e-10);

/// fourth_moment_poisson(1, 1) against E[g^8] + E[g^6] = 105 + 15.
CheckResult check_fourth_moment_exact();

/// Monte Carlo over `draws` samples of (g, h) with <a,z> = rho g + sqrt(1 - rho^2) h,
/// accepted within `sigmas` standard errors of the closed form.
CheckResult check_fourth_moment_poisson_mc(double alpha, double rho, int draws, double sigmas, std::uint64_t seed);
CheckResult check_second_moment_poisson_mc(double alpha, double rho, int draws, double sigmas, std::uint64_t seed);

/// Sample variance of y <a,z>^2 under the Bernoulli model against m * variance_proxy().exact^2.
CheckResult check_bernoulli_variance_mc(double alpha, double rho, int draws, double sigmas, std::uint64_t seed);

/// Counts tuples (alpha in (0, 10], rho in [-1, 1], m) where exact > bound; passes on zero.
CheckResult check_variance_proxy_scan(NoiseModel model, int tuples, std::uint64_t seed);

/// Fraction of Poisson trials with max_i y_i >= lemma3_threshold(alpha, beta, m).
CheckResult check_tail_frequency(double alpha, double beta, std::int64_t m, std::int64_t n, int trials,
                              double max_fraction, std::uint64_t seed);

/// Empirical correlation of (h1, h2) reconstructed from Gaussian a against lemma1_correlation.
CheckResult check_conditional_correlation(std::int64_t n, int draws, double tolerance, std::uint64_t seed);

/// argmin of dose_factor(bernoulli, .) over a log grid of `points` values in (0.01, 100].
CheckResult check_dose_minimum(int points);

/// The full suite with the default parameters.
std::vector<CheckResult> run_oracle_suite(std::uint64_t seed);

void write_report(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace lowdose
