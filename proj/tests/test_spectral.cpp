#include <doctest.h>

#include <cmath>
#include <cstring>

#include "lowdose/spectral.hpp"

using namespace lowdose;

namespace {

SensingEnsemble single_row(double a0, double a1) {
  SensingEnsemble e;
  e.A.resize(1, 2);
  e.A << a0, a1;
  return e;
}

ObservationVector obs(std::initializer_list<double> ys, ChannelKind kind = ChannelKind::poisson) {
  ObservationVector o;
  o.y.resize(static_cast<Eigen::Index>(ys.size()));
  Eigen::Index i = 0;
  for (double v : ys) o.y[i++] = v;
  o.channel.kind = kind;
  return o;
}

const PowerOptions kTight{1e-12, 100000};

}  // namespace

TEST_CASE("build_Y on hand instances") {
  RngStream rng(1, 1);
  const auto e = draw_ensemble(7, 3, rng);
  ObservationVector zero{Vec::Zero(7), {}};
  CHECK(build_Y(zero, e).apply(Vec::Ones(3)).isZero(0.0));

  const auto one = single_row(1, 0);
  const Matrix<double> y = dense_Y(obs({2}), one);
  CHECK(y == (Matrix<double>(2, 2) << 2, 0, 0, 0).finished());
}

TEST_CASE("build_Y agrees with dense formation") {
  RngStream rng(2, 1);
  for (int k = 0; k < 20; ++k) {
    const auto e = draw_ensemble(30, 6, rng);
    const auto x = make_signal(6, 1.5, RandomUnit{}, rng);
    const auto y = observe_poisson(x, e, rng);
    Matrix<double> dense = Matrix<double>::Zero(6, 6);
    for (Eigen::Index i = 0; i < 30; ++i) {
      const Vec a = e.A.row(i).transpose();
      dense += y.y[i] * a * a.transpose();
    }
    dense /= 30.0;
    const Vec v = detail::random_unit_vector<double>(6, rng);
    CHECK((build_Y(y, e).apply(v) - dense * v).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, dense.norm()));
  }
}

TEST_CASE("dense_Y refuses large n and mismatched sizes") {
  RngStream rng(3, 1);
  const auto e = draw_ensemble(4, 65, rng);
  CHECK_THROWS(dense_Y(ObservationVector{Vec::Ones(4), {}}, e));
  CHECK_THROWS_AS(build_Y(ObservationVector{Vec::Ones(3), {}}, e), DimensionMismatch);
}

TEST_CASE("objective") {
  const auto one = single_row(1, 0);
  CHECK(evaluate_objective(obs({2}), one, Vec::Zero(2)) == 0.0);
  CHECK(evaluate_objective(obs({2}), one, (Vec(2) << 3, 0).finished()) == 18.0);

  RngStream rng(4, 1);
  for (int k = 0; k < 20; ++k) {
    const auto e = draw_ensemble(50, 5, rng);
    const auto x = make_signal(5, 1.0, RandomUnit{}, rng);
    const auto y = observe_poisson(x, e, rng);
    const Vec z = detail::random_unit_vector<double>(5, rng) * 1.7;
    const double f = evaluate_objective(y, e, z);
    const double g = z.dot(build_Y(y, e).apply(z));
    CHECK(std::abs(f - g) <= 1e-12 * std::max(std::abs(g), 1e-300));
  }
  CHECK_THROWS_AS(evaluate_objective(obs({2}), one, Vec::Zero(3)), DimensionMismatch);
}

TEST_CASE("noiseless recovery of e1") {
  RngStream rng(5, 1);
  const auto e = draw_ensemble(10000, 2, rng);
  const auto x = make_signal(2, 1.0, BasisDirection{0}, rng);
  const auto y = noiseless_intensities(x, e);
  const auto est = recover(y, e, 1.0, kTight, rng);
  CHECK(relative_error(est, x) <= 0.05);
  CHECK(std::abs(est.x0.squaredNorm() - 1.0) <= 1e-10);
  CHECK(est.lambda0 >= 0.0);
}

TEST_CASE("all-zero observations have no dominant eigenpair") {
  RngStream rng(6, 1);
  const auto e = draw_ensemble(20, 3, rng);
  CHECK_THROWS_AS(recover(ObservationVector{Vec::Zero(20), {}}, e, 1.0, kTight, rng), NoDominantEigenpair);
  CHECK_THROWS_AS(recover(ObservationVector{Vec::Ones(20), {}}, e, 0.0, kTight, rng), std::invalid_argument);
}

TEST_CASE("recovery rescales exactly with the dose") {
  RngStream rng(7, 1);
  const auto e = draw_ensemble(400, 8, rng);
  const auto x = make_signal(8, 1.0, RandomUnit{}, rng);
  const auto y = observe_poisson(x, e, rng);
  RngStream s1(7, 2), s4(7, 2);
  const auto a = recover(y, e, 1.0, kTight, s1);
  const auto b = recover(y, e, 4.0, kTight, s4);
  CHECK(b.x0 == 2.0 * a.x0);
  CHECK(b.lambda0 == a.lambda0);
}

TEST_CASE("phaseless distance") {
  const Vec x = (Vec(3) << 0.3, -1.2, 2.0).finished();
  CHECK(phaseless_dist(x, x) == doctest::Approx(0.0));
  CHECK(phaseless_dist(x, -x) == doctest::Approx(0.0));
  CHECK(phaseless_dist(Vec::Unit(2, 0), Vec::Unit(2, 1)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  RngStream rng(8, 1);
  for (int k = 0; k < 100; ++k) {
    const Vec u = detail::random_unit_vector<double>(5, rng) * (1.0 + rng.uniform());
    const Vec v = detail::random_unit_vector<double>(5, rng) * (1.0 + rng.uniform());
    const double direct = std::min((u - v).norm(), (u + v).norm());
    CHECK(std::abs(phaseless_dist(u, v) - direct) <= 1e-10);
  }
  CHECK_THROWS_AS(phaseless_dist(Vec::Zero(2), Vec::Zero(3)), DimensionMismatch);
}

TEST_CASE("relative error extremes") {
  const SignalVector truth{(Vec(2) << 1, 0).finished(), 1.0};
  SpectralEstimate est;
  est.x0 = truth.x;
  CHECK(relative_error(est, truth) == 0.0);
  est.x0 = -truth.x;
  CHECK(relative_error(est, truth) == 0.0);
  est.x0 = (Vec(2) << 0, 1).finished();
  CHECK(relative_error(est, truth) == doctest::Approx(2.0));
  CHECK_THROWS(relative_error(est, SignalVector{Vec::Zero(2), 0.0}));
}

TEST_CASE("per-trial properties of the estimate") {
  for (int trial = 0; trial < 10; ++trial) {
    RngStream rng(9, trial);
    const auto e = draw_ensemble(2000, 10, rng);
    const auto x = make_signal(10, 1.0, RandomUnit{}, rng);
    const auto y = observe_poisson(x, e, rng);
    const auto est = recover(y, e, 1.0, kTight, rng);
    const double err = relative_error(est, x);
    CHECK(err >= 0.0);
    CHECK(err <= 2.0);
    CHECK(est.lambda0 >= evaluate_objective(y, e, x.x) / x.alpha);

    const double best = evaluate_objective(y, e, est.x0);
    for (int k = 0; k < 100; ++k) {
      const Vec u = detail::random_unit_vector<double>(10, rng);
      REQUIRE(best >= evaluate_objective(y, e, u) - kTight.tol * est.lambda0 * x.alpha);
    }
  }
}

TEST_CASE("truncation above the maximum leaves recovery unchanged") {
  RngStream rng(10, 1);
  const auto e = draw_ensemble(500, 6, rng);
  const auto x = make_signal(6, 2.0, RandomUnit{}, rng);
  const auto y = noiseless_intensities(x, e);
  const auto t = truncate(y, y.y.maxCoeff());
  RngStream s1(10, 2), s2(10, 2);
  const auto a = recover(y, e, 2.0, kTight, s1);
  const auto b = recover(t, e, 2.0, kTight, s2);
  CHECK(std::memcmp(a.x0.data(), b.x0.data(), 6 * sizeof(double)) == 0);
}
