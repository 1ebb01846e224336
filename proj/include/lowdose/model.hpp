#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>

#include "lowdose/linalg.hpp"
#include "lowdose/rng.hpp"

namespace lowdose {

using Vec = Vector<double>;
using EnsembleMatrix = RowMajorMatrix<double>;

inline constexpr std::size_t kDefaultMemoryCap = std::size_t{2} << 30;  // 2 GiB

/// Ground truth x together with its dose alpha = ||x||^2.
struct SignalVector {
  Vec x;
  double alpha = 0.0;

  Eigen::Index dimension() const { return x.size(); }
};

struct RandomUnit {};
struct BasisDirection {
  Eigen::Index k = 0;
};
struct GivenDirection {
  Vec v;
};
using Direction = std::variant<RandomUnit, BasisDirection, GivenDirection>;

/// x = sqrt(alpha) * direction / ||direction||.
SignalVector make_signal(Eigen::Index n, double alpha, const Direction& direction, RngStream& rng);

/// Gaussian sensing matrix; row i is a_i^T. Entries are drawn row-major from one stream.
struct SensingEnsemble {
  EnsembleMatrix A;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  Eigen::Index measurements() const { return A.rows(); }
  Eigen::Index dimension() const { return A.cols(); }
};

class MemoryCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws MemoryCapExceeded if m*n doubles exceed `memory_cap_bytes`.
SensingEnsemble draw_ensemble(Eigen::Index m, Eigen::Index n, RngStream& rng,
                              std::size_t memory_cap_bytes = kDefaultMemoryCap);

enum class ChannelKind { noiseless, poisson, bernoulli, truncated };

struct Channel {
  ChannelKind kind = ChannelKind::noiseless;
  double threshold = 0.0;  ///< only meaningful for truncated
};

std::string to_string(ChannelKind kind);

/// Observations are stored as reals for every channel so Y-assembly has one code path.
struct ObservationVector {
  Vec y;
  Channel channel;

  Eigen::Index size() const { return y.size(); }
  bool all_zero() const { return (y.array() == 0.0).all(); }
};

/// y_i = <a_i, x>^2
ObservationVector noiseless_intensities(const SignalVector& x, const SensingEnsemble& ensemble);

/// y_i ~ Poisson(<a_i, x>^2)
ObservationVector observe_poisson(const SignalVector& x, const SensingEnsemble& ensemble, RngStream& rng);

/// y_i = 1[u_i < 1 - exp(-<a_i, x>^2)], one uniform u_i per entry in index order,
/// so the same stream couples observations across doses monotonically.
ObservationVector observe_bernoulli(const SignalVector& x, const SensingEnsemble& ensemble, RngStream& rng);

/// y * 1[y <= t]. Only noiseless or Poisson observations may be truncated.
ObservationVector truncate(const ObservationVector& y, double t);

/// Harness default t = 3 alpha log m. Not prescribed by the model; a tunable.
double default_truncation_threshold(double alpha, Eigen::Index m);

}  // namespace lowdose
