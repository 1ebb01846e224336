#pragma once

#include "lowdose/linalg.hpp"
#include "lowdose/model.hpp"

namespace lowdose {

using YOperator = WeightedGramOperator<double>;

/// Y = (1/m) sum_i y_i a_i a_i^T as a matrix-free operator. Keeps a pointer to `ensemble`.
YOperator build_Y(const ObservationVector& y, const SensingEnsemble& ensemble);

/// Y formed explicitly; refuses n > 64.
Matrix<double> dense_Y(const ObservationVector& y, const SensingEnsemble& ensemble);

/// f(z) = (1/m) sum_i y_i <a_i, z>^2 = z^T Y z
double evaluate_objective(const ObservationVector& y, const SensingEnsemble& ensemble, const Vec& z);

struct SpectralEstimate {
  Vec x0;  ///< leading eigenvector of Y scaled to ||x0||^2 = alpha
  double lambda0 = 0.0;
  EigenResult<double> solver;
  Channel channel;
};

/// Leading eigenvector of Y rescaled to the known dose. Throws NoDominantEigenpair when
/// every observation is zero.
SpectralEstimate recover(const ObservationVector& y, const SensingEnsemble& ensemble, double alpha,
                         const PowerOptions& opts, RngStream& rng);

/// min over gamma in {-1, 1} of ||u - gamma v||_2
double phaseless_dist(const Vec& u, const Vec& v);

/// dist(x0, x)^2 / alpha; lies in [0, 2] when both have squared norm alpha.
double relative_error(const SpectralEstimate& est, const SignalVector& truth);

}  // namespace lowdose
