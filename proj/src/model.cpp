#include "lowdose/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lowdose {

SignalVector make_signal(Eigen::Index n, double alpha, const Direction& direction, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("make_signal: n must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("make_signal: alpha must be finite and > 0");
  }

  Vec dir = std::visit(
      [&](const auto& d) -> Vec {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, RandomUnit>) {
          return detail::random_unit_vector<double>(n, rng);
        } else if constexpr (std::is_same_v<D, BasisDirection>) {
          if (d.k < 0 || d.k >= n) throw std::invalid_argument("make_signal: basis index out of range");
          return Vec::Unit(n, d.k);
        } else {
          require_same_size("make_signal", n, d.v.size());
          return d.v;
        }
      },
      direction);

  const double norm = dir.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("make_signal: direction must be nonzero and finite");
  }
  SignalVector s;
  s.x = dir * (std::sqrt(alpha) / norm);
  s.alpha = alpha;
  return s;
}

SensingEnsemble draw_ensemble(Eigen::Index m, Eigen::Index n, RngStream& rng, std::size_t memory_cap_bytes) {
  if (m < 1 || n < 1) throw std::invalid_argument("draw_ensemble: m and n must be >= 1");
  const auto um = static_cast<std::size_t>(m);
  const auto un = static_cast<std::size_t>(n);
  if (un > std::numeric_limits<std::size_t>::max() / sizeof(double) / um ||
      um * un * sizeof(double) > memory_cap_bytes) {
    throw MemoryCapExceeded("draw_ensemble: " + std::to_string(m) + " x " + std::to_string(n) +
                            " ensemble exceeds the memory cap of " + std::to_string(memory_cap_bytes) +
                            " bytes");
  }

  SensingEnsemble e;
  e.master_seed = rng.master_seed();
  e.stream_id = rng.stream_id();
  e.A.resize(m, n);
  double* data = e.A.data();
  for (std::size_t k = 0; k < um * un; ++k) data[k] = sample_standard_gaussian(rng);
  return e;
}

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::noiseless: return "noiseless";
    case ChannelKind::poisson: return "poisson";
    case ChannelKind::bernoulli: return "bernoulli";
    case ChannelKind::truncated: return "truncated";
  }
  return "unknown";
}

namespace {

Vec squared_projections(const SignalVector& x, const SensingEnsemble& ensemble, const char* where) {
  require_same_size(where, ensemble.dimension(), x.dimension());
  return (ensemble.A * x.x).array().square().matrix();
}

}  // namespace

ObservationVector noiseless_intensities(const SignalVector& x, const SensingEnsemble& ensemble) {
  return {squared_projections(x, ensemble, "noiseless_intensities"), {ChannelKind::noiseless, 0.0}};
}

ObservationVector observe_poisson(const SignalVector& x, const SensingEnsemble& ensemble, RngStream& rng) {
  Vec y = squared_projections(x, ensemble, "observe_poisson");
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = static_cast<double>(sample_poisson(rng, y[i]));
  return {std::move(y), {ChannelKind::poisson, 0.0}};
}

ObservationVector observe_bernoulli(const SignalVector& x, const SensingEnsemble& ensemble, RngStream& rng) {
  Vec y = squared_projections(x, ensemble, "observe_bernoulli");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y[i] = static_cast<double>(sample_bernoulli(rng, -std::expm1(-y[i])));
  }
  return {std::move(y), {ChannelKind::bernoulli, 0.0}};
}

ObservationVector truncate(const ObservationVector& obs, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("truncate: threshold must be > 0");
  if (obs.channel.kind == ChannelKind::bernoulli) {
    throw std::invalid_argument("truncate: only noiseless or Poisson observations can be truncated");
  }
  ObservationVector out = obs;
  for (Eigen::Index i = 0; i < out.y.size(); ++i) {
    if (out.y[i] > t) out.y[i] = 0.0;
  }
  // Re-truncating at a lower threshold keeps the tighter one.
  const double previous = obs.channel.kind == ChannelKind::truncated ? obs.channel.threshold : t;
  out.channel = {ChannelKind::truncated, std::min(previous, t)};
  return out;
}

double default_truncation_threshold(double alpha, Eigen::Index m) {
  return 3.0 * alpha * std::log(static_cast<double>(m));
}

}  // namespace lowdose
