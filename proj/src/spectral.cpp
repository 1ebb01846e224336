#include "lowdose/spectral.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace lowdose {

YOperator build_Y(const ObservationVector& y, const SensingEnsemble& ensemble) {
  require_same_size("build_Y", ensemble.measurements(), y.size());
  return YOperator(ensemble.A, y.y);
}

Matrix<double> dense_Y(const ObservationVector& y, const SensingEnsemble& ensemble) {
  if (ensemble.dimension() > 64) throw std::invalid_argument("dense_Y: n > 64, use build_Y");
  return build_Y(y, ensemble).to_dense();
}

double evaluate_objective(const ObservationVector& y, const SensingEnsemble& ensemble, const Vec& z) {
  require_same_size("evaluate_objective", ensemble.measurements(), y.size());
  require_same_size("evaluate_objective", ensemble.dimension(), z.size());
  const Vec projections = ensemble.A * z;
  return y.y.dot(projections.cwiseAbs2()) / static_cast<double>(ensemble.measurements());
}

SpectralEstimate recover(const ObservationVector& y, const SensingEnsemble& ensemble, double alpha,
                         const PowerOptions& opts, RngStream& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("recover: alpha must be > 0");
  const YOperator op = build_Y(y, ensemble);
  SpectralEstimate est;
  est.solver = top_eigenpair(op, opts, rng);
  est.lambda0 = est.solver.eigenvalue;
  est.x0 = std::sqrt(alpha) * est.solver.eigenvector;
  est.channel = y.channel;
  return est;
}

double phaseless_dist(const Vec& u, const Vec& v) {
  require_same_size("phaseless_dist", u.size(), v.size());
  const double sq = u.squaredNorm() + v.squaredNorm() - 2.0 * std::abs(u.dot(v));
  const double dist = std::sqrt(std::max(sq, 0.0));
#ifndef NDEBUG
  // Compared as squared distances.
  const double direct = std::min((u - v).squaredNorm(), (u + v).squaredNorm());
  assert(std::abs(direct - sq) <= 1e-10 * std::max(1.0, u.squaredNorm() + v.squaredNorm()));
#endif
  return dist;
}

double relative_error(const SpectralEstimate& est, const SignalVector& truth) {
  if (!(truth.alpha > 0.0)) throw std::invalid_argument("relative_error: alpha must be > 0");
  const double d = phaseless_dist(est.x0, truth.x);
  return d * d / truth.alpha;
}

}  // namespace lowdose
