#pragma once

#include <cstdint>
#include <string_view>

namespace seqrep {

/// Keyed counter-based generator: draw n of stream (seed, stream) is
/// splitmix64's finalizer applied to key(seed, stream) + n * golden-gamma.
///
/// Child streams are derived from (seed, stream, id) alone, never from how
/// many draws the parent has consumed, so the order in which children are
/// created does not matter. Draws are platform independent because no
/// standard-library distribution is involved.
class RandomSource {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-keyed-counter/v1";

  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t position() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  /// Unbiased uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal();

  RandomSource child(std::uint64_t id) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace seqrep
