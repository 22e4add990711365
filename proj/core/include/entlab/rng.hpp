#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace entlab {

/// Seed derivation. Every random stream in the lab is addressed by a path of
/// integers hanging off one root seed (root -> iteration -> prompt -> rollout
/// -> branch), so results never depend on scheduling or thread count.
std::uint64_t mix_seed(std::uint64_t seed);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t child);
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

/// Thin wrapper over mt19937_64 with implementation-independent conversions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  /// Uniform double in [0, 1) built from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace entlab
