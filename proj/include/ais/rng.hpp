#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace ais {

/// Seedable random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard, and uniforms are built from the top
/// 53 bits of each draw, so a seed reproduces the same samples on every
/// platform.
class Rng {
 public:
  static constexpr std::uint64_t kDefaultSeed = 20010802;

  explicit Rng(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index drawn with probability proportional to `probs` (assumed to sum to 1).
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      if (probs[k] > 0.0) last_positive = k;
      cum += probs[k];
      if (u < cum) return k;
    }
    // Rounding left cum slightly below 1.
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

/// Seed of replication `r` under a master seed: master XOR r.
constexpr std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) { return master ^ r; }

}  // namespace ais
