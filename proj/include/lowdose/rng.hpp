#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>

namespace lowdose {

/// Consumers of randomness within one trial. Each gets its own stream so that
/// adding draws to one consumer never shifts the sequence seen by another.
enum class Purpose : std::uint64_t {
  signal = 1,
  ensemble = 2,
  observations = 3,
  solver = 4,
  oracle = 5,
};

/// Mixes an arbitrary list of 64-bit words into one stream id.
std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> words);

/// Stream id for (trial, purpose) under an optional cell key.
std::uint64_t derive_stream_id(std::uint64_t cell_key, std::uint64_t trial_index, Purpose purpose);

/// Counter-based random stream (Philox4x32-10).
///
/// The 128-bit counter is split into the stream id (upper half) and a block
/// index (lower half), and the master seed is the key. Two streams with
/// different ids therefore never share a counter value, and the output is a
/// pure function of (master_seed, stream_id, draw index) on every platform.
///
/// A stream is single-owner. Moving it to another thread is fine; sharing is not.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const { return key_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Next raw 64-bit word.
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on (0, 1); safe as a log() argument.
  double uniform_open();

 private:
  friend double sample_standard_gaussian(RngStream& rng);

  void refill();

  std::uint64_t key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::optional<double> spare_gaussian_;
};

/// One N(0,1) draw (Marsaglia polar method; the second variate of each pair is cached).
double sample_standard_gaussian(RngStream& rng);

/// One Poisson(lambda) draw. Sequential inversion for lambda < 10, Hoermann's
/// transformed rejection (PTRS) above. Throws std::invalid_argument for a negative
/// or non-finite lambda.
std::uint64_t sample_poisson(RngStream& rng, double lambda);

/// 1 with probability p. Consumes exactly one uniform per call, including p = 0 or 1.
int sample_bernoulli(RngStream& rng, double p);

}  // namespace lowdose
