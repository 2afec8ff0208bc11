#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace crossing {

/// Derives an independent seed for a named sub-stream from one root seed.
/// FNV-1a over (root, stream name, index); stable across platforms so every
/// run is reproducible from the root seed alone.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index = 0) {
  constexpr std::uint64_t kOffset = 1469598103934665603ull;
  constexpr std::uint64_t kPrime = 1099511628211ull;
  std::uint64_t h = kOffset;
  auto mix_byte = [&](std::uint8_t b) {
    h ^= b;
    h *= kPrime;
  };
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(root >> (8 * i)));
  for (char c : stream) mix_byte(static_cast<std::uint8_t>(c));
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(index >> (8 * i)));
  return h;
}

/// mt19937_64 with the handful of draw helpers used project-wide. Doubles are
/// produced from the top 53 bits so draws do not depend on library
/// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform over {0, ..., n-1}.
  int uniform_int(int n) {
    int v = static_cast<int>(uniform01() * n);
    return v < n ? v : n - 1;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crossing
