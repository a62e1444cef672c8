#pragma once

#include <cstdint>
#include <string_view>

namespace afcmem {

// Self-contained generator so that a given seed produces the same stream on
// every platform and standard library. std::poisson_distribution is not
// bit-stable across libstdc++/libc++, which would break the byte-identical
// report guarantee, so the samplers are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double next_double();

  // Standard normal (Box-Muller, one value per call).
  double next_normal();

  // Exact inversion for small means, normal approximation above
  // kPoissonExactLimit (relative error ~1/sqrt(mean), negligible there).
  long long next_poisson(double mean);

  static constexpr double kPoissonExactLimit = 256.0;

 private:
  std::uint64_t state_;
};

// Stable derivation of child seeds from one top-level seed. Streams derived
// with distinct labels/indices are statistically independent; the derivation
// is pure arithmetic, so every run with the same root seed sees the same
// sub-streams regardless of evaluation order.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

}  // namespace afcmem
