#pragma once

#include <cstdint>
#include <span>

namespace ppdl {

/// Seeded random source used by every randomized operation in the library.
///
/// The generator is SplitMix64 (Steele, Lea & Flood 2014): a 64-bit state
/// advanced by the golden-ratio increment and passed through a fixed
/// avalanche mix. Bounded draws use rejection sampling so results are
/// unbiased and identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;

  /// Uniform in [0, bound). bound must be non-zero.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Combines two 64-bit values into a well-mixed seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace ppdl
