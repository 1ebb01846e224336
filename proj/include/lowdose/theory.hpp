#pragma once

#include <cstdint>

#include "lowdose/linalg.hpp"
#include "lowdose/model.hpp"

namespace lowdose {

/// Measurement models the closed-form theory covers.
enum class NoiseModel { poisson, bernoulli };

/// Constants of the concentration and recovery bounds; set in the config or by fit-constants.
struct BoundConstants {
  double C_beta = 1.0;
  double C_hat_beta = 1.0;
  double beta = 2.0;

  /// Throws std::invalid_argument unless all constants are positive and beta > 1.
  void validate() const;
};

/// E[Y] = 2 x x^T + ||x||^2 I
Matrix<double> expected_Y_poisson(const Vec& x);
Matrix<double> expected_Y_poisson(const SignalVector& s);

/// E[Y] = 2/(2a+1)^{3/2} x x^T + (1 - (2a+1)^{-1/2}) I with a = ||x||^2
Matrix<double> expected_Y_bernoulli(const Vec& x);
Matrix<double> expected_Y_bernoulli(const SignalVector& s);

/// Correlation of (h1, h2) in the Gaussian decomposition
///   <a,v> = <u,v> g + sqrt(1 - <u,v>^2) h1,   <a,w> = <u,w> g + sqrt(1 - <u,w>^2) h2.
/// u, v, w must be unit vectors and v, w not collinear with u.
double lemma1_correlation(const Vec& u, const Vec& v, const Vec& w);

/// E[g^order exp(-alpha g^2)] for g ~ N(0,1), order in {0, 2, 4}.
double gaussian_exp_moment(double alpha, int order);

/// E[y^2 <a,z>^4] under the Poisson model, with rho = <x/||x||, z> for unit z.
double fourth_moment_poisson(double alpha, double rho);

/// E[<a,x>^2 <a,z>^2] = E[y <a,z>^2] under the Poisson model.
double second_moment_poisson(double alpha, double rho);

/// E[y^2 <a,z>^4] and E[y <a,z>^2] under the Bernoulli model (y^2 = y).
double fourth_moment_bernoulli(double alpha, double rho);
double second_moment_bernoulli(double alpha, double rho);

struct VarianceProxy {
  double exact = 0.0;  ///< standard deviation of (1/m) sum_i y_i <a_i,z>^2
  double bound = 0.0;  ///< closed-form upper bound on `exact`
};

VarianceProxy variance_proxy(NoiseModel model, double alpha, double rho, std::int64_t m);

struct TailThreshold {
  double tau = 0.0;            ///< max(e^2 alpha, beta + 1)
  double threshold = 0.0;      ///< tau * log m
  double failure_bound = 0.0;  ///< 3 m^-beta
};

/// Poisson max-count threshold: P(max_i y_i >= tau log m) <= 3 m^-beta. Requires m >= 2.
TailThreshold lemma3_threshold(double alpha, double beta, std::int64_t m);

struct DeviationBound {
  double value = 0.0;
  bool below_mnlogn = false;  ///< m < n log n; the bound is outside its hypothesis
};

/// Upper bound on ||Y - E[Y]||. Requires n >= 2.
DeviationBound deviation_bound(NoiseModel model, std::int64_t n, std::int64_t m, double alpha,
                               const BoundConstants& k);

/// Upper bound on dist(x0, x)^2 / alpha. Requires n >= 2 and alpha > 0.
DeviationBound theorem1_bound(NoiseModel model, std::int64_t n, std::int64_t m, double alpha,
                              const BoundConstants& k);

/// Oversampling factor of the sampling complexity: (1 + 1/alpha)^2 for Poisson,
/// (2 alpha + 1)^3 / alpha^2 for Bernoulli.
double dose_factor(NoiseModel model, double alpha);

}  // namespace lowdose
