#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace chordbench {

/// Deterministic generator: MT19937-64 with portable conversions.
///
/// The standard distributions are implementation-defined, so every draw used
/// by the library goes through the conversions here to reproduce across
/// platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal by Box-Muller.
  double normal();
  /// Index drawn with probability proportional to `weights`.
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 mix of a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// FNV-1a, for mixing names into seeds.
std::uint64_t fnv1a(std::string_view text);

}  // namespace chordbench
