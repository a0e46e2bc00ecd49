#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace clam {

// SplitMix64 step. Used to expand a 64-bit seed into generator state and to
// derive per-item seeds (seed ^ index) without correlating streams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seeded xoshiro256** generator.
///
/// State is four 64-bit words filled by four successive SplitMix64 outputs of
/// the seed. The recurrence is
///
///     result = rotl(s1 * 5, 7) * 9
///     t = s1 << 17
///     s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)
///
/// Every derived draw below is written out explicitly (no std:: distributions)
/// so that the stream is identical on every platform and in every language.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// (next_u64() >> 11) * 2^-53, in [0, 1).
  double uniform();

  /// lo + (hi - lo) * uniform().
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n) by rejection on the top bits (Lemire-free,
  /// simple modulo with rejection of the biased tail).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller on two uniforms; the sine half is cached.
  double normal();

  /// Fisher-Yates, iterating i from size-1 down to 1 with j = below(i + 1).
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace clam
