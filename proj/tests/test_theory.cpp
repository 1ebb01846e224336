#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lowdose/theory.hpp"
#include "lowdose/verify.hpp"

using namespace lowdose;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

const double kE2 = std::exp(2.0);

}  // namespace

TEST_CASE("expected Y, poisson") {
  CHECK(expected_Y_poisson(vec({1, 0})) == (Matrix<double>(2, 2) << 3, 0, 0, 1).finished());
  CHECK(expected_Y_poisson(vec({0, 0, 0})).isZero(0.0));
  CHECK(expected_Y_poisson(vec({1, 1})) == (Matrix<double>(2, 2) << 4, 2, 2, 4).finished());
}

TEST_CASE("expected Y, bernoulli") {
  CHECK(expected_Y_bernoulli(vec({0, 0})).isZero(0.0));
  const Matrix<double> e1 = expected_Y_bernoulli(vec({1, 0}));
  const double s3 = std::sqrt(3.0);
  CHECK(e1(0, 0) == doctest::Approx(2.0 / (3.0 * s3) + 1.0 - 1.0 / s3).epsilon(1e-14));
  CHECK(e1(1, 1) == doctest::Approx(1.0 - 1.0 / s3).epsilon(1e-14));
  CHECK(e1(0, 0) == doctest::Approx(0.80755).epsilon(1e-5));
  CHECK(e1(1, 1) == doctest::Approx(0.42265).epsilon(1e-5));
  CHECK(e1(0, 1) == 0.0);

  const Vec big = vec({1e3, 0});  // alpha = 1e6
  const Matrix<double> eb = expected_Y_bernoulli(big);
  const double xx_coeff = (eb(0, 0) - eb(1, 1)) / 1e6;
  CHECK(std::abs(xx_coeff) <= 1e-2);
  CHECK(std::abs(eb(1, 1) - 1.0) <= 1e-2);
}

TEST_CASE("conditional correlation closed form") {
  const Vec u = vec({1, 0, 0});
  const Vec v = vec({0, 1, 0});
  const Vec w = vec({0, 0.6, 0.8});
  CHECK(lemma1_correlation(u, v, w) == doctest::Approx(0.6).epsilon(1e-15));

  const Vec vv = vec({0.6, 0.8, 0});
  CHECK(lemma1_correlation(u, vv, vv) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(lemma1_correlation(u, u, w), std::invalid_argument);
  CHECK_THROWS_AS(lemma1_correlation(u, v, -u), std::invalid_argument);
  CHECK_THROWS_AS(lemma1_correlation(u, vec({0, 2, 0}), w), std::invalid_argument);
  CHECK_THROWS(lemma1_correlation(u, vec({0, 1}), w));
}

TEST_CASE("conditional correlation against Monte Carlo reconstruction") {
  const auto r = check_conditional_correlation(5, 1000000, 0.005, 77);
  CHECK(r.pass);
  CHECK(std::abs(r.expected) <= 1.0);
}

TEST_CASE("gaussian exponential moments") {
  CHECK(gaussian_exp_moment(0.0, 0) == 1.0);
  CHECK(gaussian_exp_moment(0.0, 4) == 3.0);
  CHECK(gaussian_exp_moment(1.0, 4) == doctest::Approx(std::pow(3.0, -1.5)).epsilon(1e-15));
  CHECK(gaussian_exp_moment(1.0, 4) == doctest::Approx(0.19245).epsilon(1e-5));
  CHECK_THROWS_AS(gaussian_exp_moment(1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_exp_moment(-1.0, 0), std::invalid_argument);
  for (const auto& r : check_gaussian_exp_moments(1e-10)) {
    CAPTURE(r.name);
    CHECK(r.pass);
  }
}

TEST_CASE("poisson moment formulas") {
  CHECK(fourth_moment_poisson(1.0, 1.0) == 120.0);
  for (double a : {0.3, 1.0, 4.0}) CHECK(fourth_moment_poisson(a, 0.0) == doctest::Approx(9 * a * a + 3 * a));
  CHECK(second_moment_poisson(1.0, 1.0) == 3.0);
  CHECK(second_moment_poisson(2.5, 0.0) == 2.5);
  CHECK(second_moment_poisson(2.0, 0.5) == 3.0);
  CHECK(check_fourth_moment_poisson_mc(1.0, 0.5, 1000000, 3.0, 5).pass);
  CHECK(check_second_moment_poisson_mc(2.0, 0.5, 1000000, 3.0, 5).pass);
}

TEST_CASE("moment formulas against an independent std::random Monte Carlo") {
  std::mt19937_64 gen(123456789);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const int draws = 400000;
  for (double a : {0.2, 1.0, 4.0}) {
    for (double rho : {0.0, 0.5, 1.0}) {
      const double perp = std::sqrt(1.0 - rho * rho);
      double s1 = 0.0, s2 = 0.0, p1 = 0.0, p2 = 0.0;
      for (int i = 0; i < draws; ++i) {
        const double g = normal(gen), h = normal(gen);
        const double az2 = std::pow(rho * g + perp * h, 2);
        const double yb = unif(gen) < -std::expm1(-a * g * g) ? 1.0 : 0.0;
        const double yp = static_cast<double>(std::poisson_distribution<int>(a * g * g + 1e-300)(gen));
        s1 += yb * az2;
        s2 += yb * yb * az2 * az2;
        const double q = yp * yp * az2 * az2;
        p1 += q;
        p2 += q * q;
      }
      CAPTURE(a);
      CAPTURE(rho);
      const double n = draws;
      const double b_second = s2 / n;
      const double b_first = s1 / n;
      CHECK(b_first == doctest::Approx(second_moment_bernoulli(a, rho)).epsilon(0.02));
      CHECK(b_second == doctest::Approx(fourth_moment_bernoulli(a, rho)).epsilon(0.03));
      const double var_b = b_second - b_first * b_first;
      const double exact = variance_proxy(NoiseModel::bernoulli, a, rho, 1).exact;
      CHECK(var_b == doctest::Approx(exact * exact).epsilon(0.03));

      const double mean_p = p1 / n;
      const double se_p = std::sqrt((p2 / n - mean_p * mean_p) / n);
      CHECK(std::abs(mean_p - fourth_moment_poisson(a, rho)) <= 4.0 * se_p);
    }
  }
}

TEST_CASE("variance proxy closed forms") {
  const auto p0 = variance_proxy(NoiseModel::poisson, 1.0, 0.0, 1);
  CHECK(p0.exact == doctest::Approx(std::sqrt(11.0)).epsilon(1e-15));
  CHECK(p0.bound == doctest::Approx(14.0).epsilon(1e-15));

  const auto p1 = variance_proxy(NoiseModel::poisson, 1.0, 1.0, 100);
  CHECK(p1.exact == doctest::Approx(std::sqrt(111.0) / 10.0).epsilon(1e-15));
  CHECK(p1.exact == doctest::Approx(1.0536).epsilon(1e-4));
  CHECK(p1.bound == doctest::Approx(1.4).epsilon(1e-15));

  for (double a : {0.01, 0.5, 1.0, 7.0}) {
    for (double rho : {-1.0, -0.3, 0.0, 0.8, 1.0}) {
      const auto b = variance_proxy(NoiseModel::bernoulli, a, rho, 12);
      CHECK(b.bound == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(b.exact <= 1.0);
    }
  }
  CHECK(check_variance_proxy_scan(NoiseModel::poisson, 10000, 3).pass);
  CHECK(check_variance_proxy_scan(NoiseModel::bernoulli, 10000, 3).pass);
}

TEST_CASE("max-count threshold") {
  const auto a = lemma3_threshold(1.0, 1.0, 1000);
  CHECK(a.tau == doctest::Approx(kE2).epsilon(1e-15));
  CHECK(a.threshold == doctest::Approx(kE2 * std::log(1000.0)).epsilon(1e-15));
  CHECK(a.failure_bound == doctest::Approx(3e-3).epsilon(1e-12));

  const auto b = lemma3_threshold(0.1, 3.0, 100);
  CHECK(b.tau == 4.0);
  CHECK(b.threshold == doctest::Approx(18.42).epsilon(1e-3));

  CHECK_THROWS_AS(lemma3_threshold(1.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(lemma3_threshold(1.0, 0.0, 100), std::invalid_argument);
}

TEST_CASE("deviation bound") {
  const BoundConstants unit{1.0, 1.0, 2.0};
  const auto b = deviation_bound(NoiseModel::bernoulli, 3, 10000, 1.0, unit);
  CHECK(b.value == doctest::Approx(std::sqrt(std::log(3.0)) * std::sqrt(3.0 / 10000.0)).epsilon(1e-15));
  CHECK_FALSE(b.below_mnlogn);
  CHECK(deviation_bound(NoiseModel::bernoulli, 32, 50, 1.0, unit).below_mnlogn);

  const BoundConstants k{0.7, 0.4, 2.0};
  for (double a : {0.1, 1.0, 3.0}) {
    const double p = deviation_bound(NoiseModel::poisson, 32, 4096, a, k).value;
    const double q = deviation_bound(NoiseModel::bernoulli, 32, 4096, a, k).value;
    CHECK(p / q == doctest::Approx((a + 0.4) * std::log(4096.0)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(deviation_bound(NoiseModel::poisson, 1, 100, 1.0, unit), std::invalid_argument);
  CHECK_THROWS_AS(deviation_bound(NoiseModel::poisson, 4, 100, 1.0, BoundConstants{1.0, 1.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(deviation_bound(NoiseModel::poisson, 4, 100, 1.0, BoundConstants{0.0, 1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("recovery error bound") {
  const BoundConstants k{0.9, 0.3, 2.0};
  for (double a : {0.2, 1.0, 5.0}) {
    const double t = theorem1_bound(NoiseModel::bernoulli, 16, 8192, a, k).value;
    const double d = deviation_bound(NoiseModel::bernoulli, 16, 8192, a, k).value;
    CHECK(t == doctest::Approx(2.0 * std::pow(2 * a + 1, 1.5) / a * d).epsilon(1e-14));
  }

  const double rate = std::sqrt(std::log(16.0)) * std::sqrt(16.0 / 8192.0);
  const double limit = 2.0 * k.C_beta * std::log(8192.0) * rate;
  CHECK(std::abs(theorem1_bound(NoiseModel::poisson, 16, 8192, 1e6, k).value / limit - 1.0) <= 1e-3);

  for (auto model : {NoiseModel::poisson, NoiseModel::bernoulli}) {
    double previous = INFINITY;
    for (int e = 10; e <= 16; ++e) {
      const double v = theorem1_bound(model, 32, std::int64_t{1} << e, 1.0, k).value;
      CHECK(v < previous);
      previous = v;
    }
  }
  CHECK_THROWS_AS(theorem1_bound(NoiseModel::poisson, 16, 100, 0.0, k), std::invalid_argument);
}

TEST_CASE("dose factor") {
  CHECK(dose_factor(NoiseModel::bernoulli, 1.0) == 27.0);
  CHECK(dose_factor(NoiseModel::poisson, 1.0) == 4.0);
  for (double a : {0.1, 0.5, 2.0, 10.0}) CHECK(dose_factor(NoiseModel::bernoulli, 1.0) < dose_factor(NoiseModel::bernoulli, a));
  CHECK_THROWS_AS(dose_factor(NoiseModel::poisson, 0.0), std::invalid_argument);
  CHECK(check_dose_minimum(10000).pass);
}

TEST_CASE("monte carlo average of Y matches the closed forms") {
  CHECK(check_expected_Y(NoiseModel::poisson, 8, 2000, 1.0, 100, 0.1, 3).pass);
  CHECK(check_expected_Y(NoiseModel::bernoulli, 8, 2000, 1.0, 100, 0.1, 3).pass);
}
