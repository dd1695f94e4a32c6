#pragma once

#include "hardshrink/types.hpp"

#include <array>
#include <cstdint>

namespace hardshrink {

/// Reproducible random stream: xoshiro256** whose 256-bit state is filled by
/// SplitMix64 from a mix of (seed, stream_id). Every distribution below is
/// implemented here (no <random> distributions) so draws are identical across
/// standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via the polar Box-Muller method.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  IndexSet sample_without_replacement(Index n, Index k);

  /// Uniformly random permutation of [0, n).
  IndexSet permutation(Index n);

  Vector normal_vector(Index n);
  Matrix normal_matrix(Index rows, Index cols);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace hardshrink
