#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>

#include "lowdose/rng.hpp"

namespace lowdose {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(const std::string& where, Eigen::Index expected, Eigen::Index got)
      : std::invalid_argument(where + ": dimension mismatch (expected " + std::to_string(expected) +
                              ", got " + std::to_string(got) + ")") {}
};

/// Thrown when every operator application vanishes, so no eigenvector can be singled out.
class NoDominantEigenpair : public std::runtime_error {
 public:
  NoDominantEigenpair() : std::runtime_error("no dominant eigenpair: operator is zero") {}
};

inline void require_same_size(const char* where, Eigen::Index expected, Eigen::Index got) {
  if (expected != got) throw DimensionMismatch(where, expected, got);
}

template <typename Scalar>
Scalar dot(const Vector<Scalar>& a, const Vector<Scalar>& b) {
  require_same_size("dot", a.size(), b.size());
  return a.dot(b);
}

template <typename Scalar>
Scalar norm2(const Vector<Scalar>& v) {
  return v.norm();
}

/// a*x + y
template <typename Scalar>
Vector<Scalar> axpy(Scalar a, const Vector<Scalar>& x, const Vector<Scalar>& y) {
  require_same_size("axpy", x.size(), y.size());
  return a * x + y;
}

// ---------------------------------------------------------------------------
// Symmetric operators
// ---------------------------------------------------------------------------

template <typename Op>
concept SymmetricOperator = requires(const Op& op, const Vector<typename Op::Scalar>& v) {
  typename Op::Scalar;
  { op.dimension() } -> std::convertible_to<Eigen::Index>;
  { op.apply(v) } -> std::convertible_to<Vector<typename Op::Scalar>>;
};

/// A symmetric operator backed by a dense n x n array.
template <typename Scalar_>
class ExplicitOperator {
 public:
  using Scalar = Scalar_;

  explicit ExplicitOperator(Matrix<Scalar> m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionMismatch("ExplicitOperator", m_.rows(), m_.cols());
  }

  Eigen::Index dimension() const { return m_.rows(); }
  const Matrix<Scalar>& matrix() const { return m_; }

  Vector<Scalar> apply(const Vector<Scalar>& v) const {
    require_same_size("ExplicitOperator::apply", dimension(), v.size());
    return m_ * v;
  }

 private:
  Matrix<Scalar> m_;
};

/// v -> (1/m) A^T diag(w) A v, for an m x n ensemble A and weights w.
///
/// Holds a pointer to the ensemble; the ensemble must outlive the operator.
/// One application costs O(mn) and the n x n product is never formed.
template <typename Scalar_>
class WeightedGramOperator {
 public:
  using Scalar = Scalar_;

  WeightedGramOperator(const RowMajorMatrix<Scalar>& ensemble, Vector<Scalar> weights)
      : ensemble_(&ensemble), weights_(std::move(weights)) {
    require_same_size("WeightedGramOperator", ensemble.rows(), weights_.size());
    if (ensemble.rows() == 0) throw std::invalid_argument("WeightedGramOperator: empty ensemble");
  }

  Eigen::Index dimension() const { return ensemble_->cols(); }
  Eigen::Index measurements() const { return ensemble_->rows(); }
  const Vector<Scalar>& weights() const { return weights_; }
  const RowMajorMatrix<Scalar>& ensemble() const { return *ensemble_; }

  Vector<Scalar> apply(const Vector<Scalar>& v) const {
    require_same_size("WeightedGramOperator::apply", dimension(), v.size());
    Vector<Scalar> projections = (*ensemble_) * v;
    projections.array() *= weights_.array();
    Vector<Scalar> out = ensemble_->transpose() * projections;
    out /= static_cast<Scalar>(measurements());
    return out;
  }

  /// (1/m) sum_i w_i a_i a_i^T, formed explicitly. Only meant for small n.
  Matrix<Scalar> to_dense() const {
    const auto& a = *ensemble_;
    Matrix<Scalar> weighted = a.transpose() * weights_.asDiagonal();
    Matrix<Scalar> out = weighted * a;
    out /= static_cast<Scalar>(measurements());
    return out;
  }

 private:
  const RowMajorMatrix<Scalar>* ensemble_;
  Vector<Scalar> weights_;
};

/// lhs - rhs, e.g. Y - E[Y].
template <SymmetricOperator Lhs, SymmetricOperator Rhs>
  requires std::same_as<typename Lhs::Scalar, typename Rhs::Scalar>
class DifferenceOperator {
 public:
  using Scalar = typename Lhs::Scalar;

  DifferenceOperator(Lhs lhs, Rhs rhs) : lhs_(std::move(lhs)), rhs_(std::move(rhs)) {
    require_same_size("DifferenceOperator", lhs_.dimension(), rhs_.dimension());
  }

  Eigen::Index dimension() const { return lhs_.dimension(); }
  Vector<Scalar> apply(const Vector<Scalar>& v) const { return lhs_.apply(v) - rhs_.apply(v); }

 private:
  Lhs lhs_;
  Rhs rhs_;
};

template <SymmetricOperator Op>
class ScaledOperator {
 public:
  using Scalar = typename Op::Scalar;

  ScaledOperator(Op op, Scalar factor) : op_(std::move(op)), factor_(factor) {}

  Eigen::Index dimension() const { return op_.dimension(); }
  Vector<Scalar> apply(const Vector<Scalar>& v) const { return factor_ * op_.apply(v); }

 private:
  Op op_;
  Scalar factor_;
};

template <SymmetricOperator Lhs, SymmetricOperator Rhs>
DifferenceOperator<Lhs, Rhs> difference(Lhs lhs, Rhs rhs) {
  return DifferenceOperator<Lhs, Rhs>(std::move(lhs), std::move(rhs));
}

template <SymmetricOperator Op>
ScaledOperator<Op> scaled(Op op, typename Op::Scalar factor) {
  return ScaledOperator<Op>(std::move(op), factor);
}

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

struct PowerOptions {
  double tol = 1e-8;
  int max_iter = 10000;
};

template <typename Scalar>
struct EigenResult {
  Scalar eigenvalue = 0;
  Vector<Scalar> eigenvector;
  int iterations = 0;
  Scalar residual = 0;  ///< ||Mv - lambda v||_2
  bool converged = false;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> random_unit_vector(Eigen::Index n, RngStream& rng) {
  Vector<Scalar> v(n);
  for (;;) {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<Scalar>(sample_standard_gaussian(rng));
    const Scalar norm = v.norm();
    if (norm > Scalar(0)) return v / norm;
  }
}

/// First nonzero component made positive.
template <typename Scalar>
void normalize_sign(Vector<Scalar>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != Scalar(0)) {
      if (v[i] < Scalar(0)) v = -v;
      return;
    }
  }
}

/// Power iteration on `step`, which must be symmetric with a nonnegative dominant eigenvalue.
/// Leaves the eigenvector empty when an application vanishes.
template <typename Scalar, typename Step>
EigenResult<Scalar> power_iterate(Eigen::Index n, Step&& step, double tol, int max_iter, RngStream& rng) {
  if (!(tol > 0.0)) throw std::invalid_argument("power iteration: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("power iteration: max_iter must be >= 1");

  EigenResult<Scalar> result;
  Vector<Scalar> v = random_unit_vector<Scalar>(n, rng);
  for (int it = 1; it <= max_iter; ++it) {
    Vector<Scalar> w = step(v);
    const Scalar w_norm = w.norm();
    if (w_norm == Scalar(0)) {
      result.iterations = it;
      return result;  // eigenvector left empty
    }
    const Scalar lambda = v.dot(w);
    const Scalar residual = (w - lambda * v).norm();
    result.eigenvalue = lambda;
    result.eigenvector = v;
    result.iterations = it;
    result.residual = residual;
    if (residual <= static_cast<Scalar>(tol) * std::abs(lambda)) {
      result.converged = true;
      return result;
    }
    v = w / w_norm;
  }
  return result;
}

}  // namespace detail

/// Dominant eigenpair of a symmetric operator by power iteration from a random unit start.
///
/// Stops once ||Mv - lambda v|| <= tol * |lambda|; hitting max_iter is reported through
/// `converged = false`, not an error. With a repeated top eigenvalue the returned vector
/// depends on the start. Throws NoDominantEigenpair for the zero operator.
template <SymmetricOperator Op>
EigenResult<typename Op::Scalar> top_eigenpair(const Op& op, double tol, int max_iter, RngStream& rng) {
  using Scalar = typename Op::Scalar;
  auto result = detail::power_iterate<Scalar>(
      op.dimension(), [&](const Vector<Scalar>& v) { return op.apply(v); }, tol, max_iter, rng);
  if (result.eigenvector.size() == 0) throw NoDominantEigenpair();
  detail::normalize_sign(result.eigenvector);
  return result;
}

template <SymmetricOperator Op>
EigenResult<typename Op::Scalar> top_eigenpair(const Op& op, const PowerOptions& opts, RngStream& rng) {
  return top_eigenpair(op, opts.tol, opts.max_iter, rng);
}

/// max |eigenvalue| of a (possibly indefinite) symmetric operator, via power
/// iteration on v -> M(Mv). Returns 0 for the zero operator.
template <SymmetricOperator Op>
typename Op::Scalar spectral_norm_sym(const Op& op, double tol, int max_iter, RngStream& rng) {
  using Scalar = typename Op::Scalar;
  auto result = detail::power_iterate<Scalar>(
      op.dimension(), [&](const Vector<Scalar>& v) { return op.apply(op.apply(v)); }, tol, max_iter,
      rng);
  if (result.eigenvector.size() == 0) return Scalar(0);
  return std::sqrt(std::max(result.eigenvalue, Scalar(0)));
}

template <SymmetricOperator Op>
typename Op::Scalar spectral_norm_sym(const Op& op, const PowerOptions& opts, RngStream& rng) {
  return spectral_norm_sym(op, opts.tol, opts.max_iter, rng);
}

}  // namespace lowdose
