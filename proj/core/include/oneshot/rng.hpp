#pragma once

#include <cstdint>
#include <random>

namespace oneshot {

/// Seeded 64-bit random stream. Uniform variates are built from the raw
/// engine output, so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  /// Independent stream for worker `index` derived from a base seed.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on [0, 1).
  double uniform01() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  /// Uniform on [-1, 1).
  double uniform_symmetric() noexcept { return 2.0 * uniform01() - 1.0; }
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace oneshot
