#include "lowdose/verify.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "lowdose/model.hpp"
#include "lowdose/spectral.hpp"

namespace lowdose {

namespace {

RngStream oracle_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  return RngStream(seed, derive_stream_id({tag, index, static_cast<std::uint64_t>(Purpose::oracle)}));
}

enum : std::uint64_t {
  kTagExpectedY = 101,
  kTagFourth = 102,
  kTagSecond = 103,
  kTagBernoulliVar = 104,
  kTagScan = 105,
  kTagTail = 106,
  kTagCorrelation = 107,
};

struct RunningMoments {
  double n = 0.0, mean = 0.0, m2 = 0.0;

  void push(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return m2 / (n - 1.0); }
  double std_error() const { return std::sqrt(variance() / n); }
};

CheckResult within_sigmas(std::string name, const RunningMoments& mc, double expected, double sigmas) {
  CheckResult r;
  r.name = std::move(name);
  r.measured = mc.mean;
  r.expected = expected;
  r.tolerance = sigmas * mc.std_error();
  r.pass = std::abs(mc.mean - expected) <= r.tolerance;
  r.detail = fmt::format("{:.0f} draws, standard error {:.3g}", mc.n, mc.std_error());
  return r;
}

}  // namespace

CheckResult check_expected_Y(NoiseModel model, std::int64_t n, std::int64_t m, double alpha, int trials,
                             double tolerance, std::uint64_t seed) {
  RngStream signal_rng = oracle_stream(seed, kTagExpectedY, static_cast<std::uint64_t>(model));
  const SignalVector x = make_signal(n, alpha, RandomUnit{}, signal_rng);

  Matrix<double> sum = Matrix<double>::Zero(n, n);
  for (int t = 0; t < trials; ++t) {
    RngStream rng = oracle_stream(seed, kTagExpectedY, 1000 + static_cast<std::uint64_t>(model) * 1000000 + t);
    const SensingEnsemble ens = draw_ensemble(m, n, rng);
    const ObservationVector y =
        model == NoiseModel::poisson ? observe_poisson(x, ens, rng) : observe_bernoulli(x, ens, rng);
    sum += dense_Y(y, ens);
  }
  const Matrix<double> average = sum / static_cast<double>(trials);
  const Matrix<double> expected =
      model == NoiseModel::poisson ? expected_Y_poisson(x) : expected_Y_bernoulli(x);

  CheckResult r;
  r.name = fmt::format("E[Y] {} (n={}, m={}, alpha={}, {} trials)",
                       model == NoiseModel::poisson ? "poisson" : "bernoulli", n, m, alpha, trials);
  r.measured = (average - expected).norm();
  r.expected = 0.0;
  r.tolerance = tolerance;
  r.pass = r.measured <= tolerance;
  r.detail = "Frobenius distance of Monte Carlo mean to closed form";
  return r;
}

std::vector<CheckResult> check_gaussian_exp_moments(double tolerance) {
  using boost::math::quadrature::gauss_kronrod;
  const double inf = std::numeric_limits<double>::infinity();
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

  std::vector<CheckResult> out;
  for (double alpha : {0.0, 0.5, 1.0, 10.0}) {
    for (int k : {0, 2, 4}) {
      auto integrand = [&](double t) {
        return std::pow(t, k) * std::exp(-alpha * t * t) * std::exp(-0.5 * t * t) * inv_sqrt_2pi;
      };
      double error = 0.0;
      const double quad = gauss_kronrod<double, 61>::integrate(integrand, -inf, inf, 15, 1e-15, &error);
      CheckResult r;
      r.name = fmt::format("E[g^{} exp(-{} g^2)] vs quadrature", k, alpha);
      r.measured = gaussian_exp_moment(alpha, k);
      r.expected = quad;
      r.tolerance = tolerance;
      r.pass = std::abs(r.measured - r.expected) <= tolerance;
      r.detail = fmt::format("abs error {:.3g}, quadrature error estimate {:.3g}", std::abs(r.measured - quad), error);
      out.push_back(std::move(r));
    }
  }
  return out;
}

CheckResult check_fourth_moment_exact() {
  CheckResult r;
  r.name = "E[y^2 <a,z>^4] poisson at alpha=1, rho=1";
  r.measured = fourth_moment_poisson(1.0, 1.0);
  r.expected = 105.0 + 15.0;
  r.tolerance = 0.0;
  r.pass = r.measured == r.expected;
  r.detail = "E[g^8] + E[g^6]";
  return r;
}

CheckResult check_fourth_moment_poisson_mc(double alpha, double rho, int draws, double sigmas, std::uint64_t seed) {
  RngStream rng = oracle_stream(seed, kTagFourth);
  const double perp = std::sqrt(1.0 - rho * rho);
  RunningMoments mc;
  for (int i = 0; i < draws; ++i) {
    const double g = sample_standard_gaussian(rng);
    const double h = sample_standard_gaussian(rng);
    const double az = rho * g + perp * h;
    const auto y = static_cast<double>(sample_poisson(rng, alpha * g * g));
    mc.push(y * y * az * az * az * az);
  }
  return within_sigmas(fmt::format("E[y^2 <a,z>^4] poisson MC (alpha={}, rho={})", alpha, rho), mc,
                       fourth_moment_poisson(alpha, rho), sigmas);
}

CheckResult check_second_moment_poisson_mc(double alpha, double rho, int draws, double sigmas, std::uint64_t seed) {
  RngStream rng = oracle_stream(seed, kTagSecond);
  const double perp = std::sqrt(1.0 - rho * rho);
  RunningMoments mc;
  for (int i = 0; i < draws; ++i) {
    const double g = sample_standard_gaussian(rng);
    const double h = sample_standard_gaussian(rng);
    const double az = rho * g + perp * h;
    mc.push(alpha * g * g * az * az);
  }
  return within_sigmas(fmt::format("E[<a,x>^2 <a,z>^2] MC (alpha={}, rho={})", alpha, rho), mc,
                       second_moment_poisson(alpha, rho), sigmas);
}

CheckResult check_bernoulli_variance_mc(double alpha, double rho, int draws, double sigmas, std::uint64_t seed) {
  RngStream rng = oracle_stream(seed, kTagBernoulliVar);
  const double perp = std::sqrt(1.0 - rho * rho);
  std::vector<double> values(static_cast<std::size_t>(draws));
  double mean = 0.0;
  for (auto& v : values) {
    const double g = sample_standard_gaussian(rng);
    const double h = sample_standard_gaussian(rng);
    const double az = rho * g + perp * h;
    const double y = sample_bernoulli(rng, -std::expm1(-alpha * g * g));
    v = y * az * az;
    mean += v;
  }
  mean /= draws;
  double c2 = 0.0, c4 = 0.0;
  for (double v : values) {
    const double d = (v - mean) * (v - mean);
    c2 += d;
    c4 += d * d;
  }
  const double n = draws;
  const double var = c2 / (n - 1.0);
  const double se = std::sqrt(std::max(c4 / n - var * var, 0.0) / n);

  const double exact = variance_proxy(NoiseModel::bernoulli, alpha, rho, 1).exact;
  CheckResult r;
  r.name = fmt::format("Var(y <a,z>^2) bernoulli MC (alpha={}, rho={})", alpha, rho);
  r.measured = var;
  r.expected = exact * exact;
  r.tolerance = sigmas * se;
  r.pass = std::abs(r.measured - r.expected) <= r.tolerance;
  r.detail = fmt::format("{} draws, standard error {:.3g}", draws, se);
  return r;
}

CheckResult check_variance_proxy_scan(NoiseModel model, int tuples, std::uint64_t seed) {
  RngStream rng = oracle_stream(seed, kTagScan, static_cast<std::uint64_t>(model));
  int violations = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < tuples; ++i) {
    const double alpha = 10.0 * (1.0 - rng.uniform());  // (0, 10]
    const double rho = 2.0 * rng.uniform() - 1.0;
    const auto m = static_cast<std::int64_t>(std::floor(std::exp(rng.uniform() * std::log(1e6)))) ;
    const VarianceProxy v = variance_proxy(model, alpha, rho, std::max<std::int64_t>(m, 1));
    worst_ratio = std::max(worst_ratio, v.exact / v.bound);
    if (v.exact > v.bound) ++violations;
  }
  CheckResult r;
  r.name = fmt::format("V exact <= bound, {} ({} tuples)", model == NoiseModel::poisson ? "poisson" : "bernoulli",
                       tuples);
  r.measured = violations;
  r.expected = 0.0;
  r.tolerance = 0.0;
  r.pass = violations == 0;
  r.detail = fmt::format("largest exact/bound ratio {:.4f}", worst_ratio);
  return r;
}

CheckResult check_tail_frequency(double alpha, double beta, std::int64_t m, std::int64_t n, int trials,
                              double max_fraction, std::uint64_t seed) {
  const TailThreshold tail = lemma3_threshold(alpha, beta, m);
  int exceed = 0;
  double largest = 0.0;
  for (int t = 0; t < trials; ++t) {
    RngStream rng = oracle_stream(seed, kTagTail, static_cast<std::uint64_t>(t));
    const SignalVector x = make_signal(n, alpha, RandomUnit{}, rng);
    const SensingEnsemble ens = draw_ensemble(m, n, rng);
    const double top = observe_poisson(x, ens, rng).y.maxCoeff();
    largest = std::max(largest, top);
    if (top >= tail.threshold) ++exceed;
  }
  CheckResult r;
  r.name = fmt::format("max y >= tau log m, poisson (alpha={}, beta={}, m={}, n={})", alpha, beta, m, n);
  r.measured = static_cast<double>(exceed) / trials;
  r.expected = tail.failure_bound;
  r.tolerance = max_fraction;
  r.pass = r.measured <= max_fraction;
  r.detail = fmt::format("threshold {:.4f}, largest count seen {}, {} trials", tail.threshold, largest, trials);
  return r;
}

CheckResult check_conditional_correlation(std::int64_t n, int draws, double tolerance, std::uint64_t seed) {
  RngStream rng = oracle_stream(seed, kTagCorrelation);
  auto unit = [&] { return detail::random_unit_vector<double>(n, rng); };
  const Vec u = unit(), v = unit(), w = unit();
  const double uv = u.dot(v), uw = u.dot(w);
  const double sv = std::sqrt(1.0 - uv * uv), sw = std::sqrt(1.0 - uw * uw);

  double s11 = 0.0, s22 = 0.0, s12 = 0.0;
  Vec a(n);
  for (int i = 0; i < draws; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) a[k] = sample_standard_gaussian(rng);
    const double g = a.dot(u);
    const double h1 = (a.dot(v) - uv * g) / sv;
    const double h2 = (a.dot(w) - uw * g) / sw;
    s11 += h1 * h1;
    s22 += h2 * h2;
    s12 += h1 * h2;
  }
  CheckResult r;
  r.name = fmt::format("corr(h1, h2) from Gaussian a in R^{}", n);
  r.measured = s12 / std::sqrt(s11 * s22);
  r.expected = lemma1_correlation(u, v, w);
  r.tolerance = tolerance;
  r.pass = std::abs(r.measured - r.expected) <= tolerance;
  r.detail = fmt::format("{} draws", draws);
  return r;
}

CheckResult check_dose_minimum(int points) {
  double best_alpha = 0.0, best = std::numeric_limits<double>::infinity();
  int ties = 0;
  for (int i = 1; i <= points; ++i) {
    const double alpha = std::pow(10.0, -2.0 + 4.0 * i / points);
    const double f = dose_factor(NoiseModel::bernoulli, alpha);
    if (f < best) {
      best = f;
      best_alpha = alpha;
      ties = 0;
    } else if (f == best) {
      ++ties;
    }
  }
  CheckResult r;
  r.name = fmt::format("argmin of (2a+1)^3/a^2 on {} log-spaced points in (0.01, 100]", points);
  r.measured = best_alpha;
  r.expected = 1.0;
  r.tolerance = 0.0;
  r.pass = best_alpha == 1.0 && ties == 0;
  r.detail = fmt::format("minimum value {:.6g}", best);
  return r;
}

std::vector<CheckResult> run_oracle_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(check_expected_Y(NoiseModel::poisson, 8, 2000, 1.0, 500, 0.05, seed));
  out.push_back(check_expected_Y(NoiseModel::bernoulli, 8, 2000, 1.0, 500, 0.05, seed));
  for (auto& r : check_gaussian_exp_moments(1e-10)) out.push_back(std::move(r));
  out.push_back(check_fourth_moment_exact());
  out.push_back(check_fourth_moment_poisson_mc(1.0, 0.5, 1000000, 3.0, seed));
  out.push_back(check_second_moment_poisson_mc(2.0, 0.5, 1000000, 3.0, seed));
  out.push_back(check_bernoulli_variance_mc(1.0, 0.5, 1000000, 3.0, seed));
  out.push_back(check_variance_proxy_scan(NoiseModel::poisson, 10000, seed));
  out.push_back(check_variance_proxy_scan(NoiseModel::bernoulli, 10000, seed));
  out.push_back(check_tail_frequency(1.0, 1.0, 1000, 16, 1000, 0.05, seed));
  out.push_back(check_conditional_correlation(5, 1000000, 0.005, seed));
  out.push_back(check_dose_minimum(10000));
  return out;
}

void write_report(std::ostream& out, const std::vector<CheckResult>& results) {
  int failed = 0;
  for (const auto& r : results) {
    if (!r.pass) ++failed;
    out << fmt::format("[{}] {}\n       measured {:.12g}  expected {:.12g}  tolerance {:.3g}  ({})\n",
                       r.pass ? "PASS" : "FAIL", r.name, r.measured, r.expected, r.tolerance, r.detail);
  }
  out << fmt::format("{} checks, {} failed\n", results.size(), failed);
}

}  // namespace lowdose
