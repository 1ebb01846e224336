#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "lowdose/detail/philox.hpp"
#include "lowdose/rng.hpp"

using namespace lowdose;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using detail::philox4x32_10;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        detail::PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        detail::PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        detail::PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniform draws stay in range") {
  RngStream rng(3, 4);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = rng.uniform_open();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("gaussian sample mean and variance") {
  RngStream rng(2024, 1);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = sample_standard_gaussian(rng);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) <= 0.005);
  CHECK(var >= 0.995);
  CHECK(var <= 1.005);
}

TEST_CASE("same seed and stream reproduce bit-exactly") {
  RngStream a(42, 0), b(42, 0);
  for (int i = 0; i < 100; ++i) {
    const double x = sample_standard_gaussian(a);
    const double y = sample_standard_gaussian(b);
    REQUIRE(std::memcmp(&x, &y, sizeof x) == 0);
  }
}

TEST_CASE("distinct streams are uncorrelated") {
  RngStream a(42, derive_stream_id(0, 0, Purpose::ensemble));
  RngStream b(42, derive_stream_id(0, 0, Purpose::observations));
  const int n = 100000;
  double sab = 0.0, saa = 0.0, sbb = 0.0, sa = 0.0, sb = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_standard_gaussian(a), y = sample_standard_gaussian(b);
    sa += x;
    sb += y;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double rho = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::abs(rho) < 0.01);
}

TEST_CASE("derived stream ids differ across purposes and trials") {
  CHECK(derive_stream_id(1, 0, Purpose::ensemble) != derive_stream_id(1, 0, Purpose::observations));
  CHECK(derive_stream_id(1, 0, Purpose::ensemble) != derive_stream_id(1, 1, Purpose::ensemble));
  CHECK(derive_stream_id(1, 0, Purpose::ensemble) != derive_stream_id(2, 0, Purpose::ensemble));
  CHECK(derive_stream_id(1, 0, Purpose::ensemble) == derive_stream_id(1, 0, Purpose::ensemble));
}

TEST_CASE("poisson: degenerate, mean and variance") {
  RngStream rng(11, 0);
  for (int i = 0; i < 1000; ++i) REQUIRE(sample_poisson(rng, 0.0) == 0u);

  const int n = 100000;
  const double lambda = 2.5;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<double>(sample_poisson(rng, lambda));
    sum += k;
    sum2 += k * k;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - lambda) <= 3.0 * std::sqrt(lambda / n));
  CHECK(std::abs(var - lambda) <= 0.1);
}

TEST_CASE("poisson: large-lambda branch mean and variance") {
  RngStream rng(12, 0);
  for (double lambda : {10.0, 37.5, 1000.0}) {
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<double>(sample_poisson(rng, lambda));
      sum += k;
      sum2 += k * k;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CAPTURE(lambda);
    CHECK(std::abs(mean - lambda) <= 4.0 * std::sqrt(lambda / n));
    CHECK(std::abs(var / lambda - 1.0) <= 0.02);
  }
}

TEST_CASE("poisson: chi-square goodness of fit against the exact pmf") {
  for (double lambda : {0.1, 1.0, 5.0, 12.0}) {
    RngStream rng(99, static_cast<std::uint64_t>(lambda * 1000));
    const int draws = 1000000;
    std::vector<double> observed(21, 0.0);
    for (int i = 0; i < draws; ++i) {
      const auto k = sample_poisson(rng, lambda);
      observed[std::min<std::uint64_t>(k, 20)] += 1.0;
    }
    std::vector<double> expected(21, 0.0);
    double pmf = std::exp(-lambda), cdf = 0.0;
    for (int k = 0; k < 20; ++k) {
      expected[k] = pmf * draws;
      cdf += pmf;
      pmf *= lambda / (k + 1);
    }
    expected[20] = (1.0 - cdf) * draws;

    // Merge sparse tail bins so every expected count is at least 5.
    std::vector<double> obs, exp;
    double o_acc = 0.0, e_acc = 0.0;
    for (int k = 20; k >= 0; --k) {
      o_acc += observed[k];
      e_acc += expected[k];
      if (e_acc >= 5.0) {
        obs.push_back(o_acc);
        exp.push_back(e_acc);
        o_acc = e_acc = 0.0;
      }
    }
    if (e_acc > 0.0) {
      obs.back() += o_acc;
      exp.back() += e_acc;
    }
    double chi2 = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) chi2 += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
    const double dof = static_cast<double>(obs.size() - 1);
    const double critical = boost::math::quantile(boost::math::chi_squared(dof), 1.0 - 1e-3);
    CAPTURE(lambda);
    CAPTURE(dof);
    CHECK(chi2 < critical);
  }
}

TEST_CASE("poisson rejects invalid rates") {
  RngStream rng(1, 1);
  CHECK_THROWS_AS(sample_poisson(rng, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_poisson(rng, std::numeric_limits<double>::infinity()), std::invalid_argument);
  CHECK_THROWS_AS(sample_poisson(rng, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST_CASE("bernoulli: degenerate rates, empirical rate, domain") {
  RngStream rng(5, 5);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(sample_bernoulli(rng, 0.0) == 0);
    REQUIRE(sample_bernoulli(rng, 1.0) == 1);
  }
  const double p = 1.0 - std::exp(-1.0);
  const int n = 100000;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += sample_bernoulli(rng, p);
  CHECK(std::abs(static_cast<double>(ones) / n - p) <= 0.005);

  CHECK_THROWS_AS(sample_bernoulli(rng, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(sample_bernoulli(rng, 1.1), std::invalid_argument);
}
