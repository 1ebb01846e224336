#include "lowdose/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lowdose/detail/philox.hpp"

namespace lowdose {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

std::uint64_t derive_stream_id(std::uint64_t cell_key, std::uint64_t trial_index, Purpose purpose) {
  return derive_stream_id({cell_key, trial_index, static_cast<std::uint64_t>(purpose)});
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : key_(master_seed), stream_id_(stream_id) {}

void RngStream::refill() {
  const detail::PhiloxCounter ctr{
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const detail::PhiloxKey key{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
  const auto out = detail::philox4x32_10(ctr, key);
  ++block_;
  // Consumed back to front.
  buffer_[1] = static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32);
  buffer_[0] = static_cast<std::uint64_t>(out[2]) | (static_cast<std::uint64_t>(out[3]) << 32);
  buffered_ = 2;
}

std::uint64_t RngStream::next_u64() {
  if (buffered_ == 0) refill();
  return buffer_[--buffered_];
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * kTwoPow53Inv; }

double RngStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * kTwoPow53Inv;
}

double sample_standard_gaussian(RngStream& rng) {
  if (rng.spare_gaussian_) {
    const double g = *rng.spare_gaussian_;
    rng.spare_gaussian_.reset();
    return g;
  }
  double u, v, s;
  do {
    u = 2.0 * rng.uniform() - 1.0;
    v = 2.0 * rng.uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  rng.spare_gaussian_ = v * f;
  return u * f;
}

namespace {

std::uint64_t poisson_inversion(RngStream& rng, double lambda) {
  const double u = rng.uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf && k < 1000) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

std::uint64_t poisson_ptrs(RngStream& rng, double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);

  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

std::uint64_t sample_poisson(RngStream& rng, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("sample_poisson: lambda must be finite and >= 0");
  }
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) return poisson_inversion(rng, lambda);
  return poisson_ptrs(rng, lambda);
}

int sample_bernoulli(RngStream& rng, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("sample_bernoulli: p must lie in [0, 1]");
  }
  return rng.uniform() < p ? 1 : 0;
}

}  // namespace lowdose
