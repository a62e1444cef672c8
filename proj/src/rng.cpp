#include "afcmem/rng.hpp"

#include <cmath>

namespace afcmem {

namespace {

// splitmix64 (Vigna); full-period 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
  // Avoid log(0) by nudging u1 away from zero.
  double u1 = next_double();
  double u2 = next_double();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

long long Rng::next_poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean <= kPoissonExactLimit) {
    // Knuth inversion by uniform products.
    const double threshold = std::exp(-mean);
    long long k = 0;
    double product = next_double();
    while (product > threshold) {
      ++k;
      product *= next_double();
    }
    return k;
  }
  const double draw = mean + std::sqrt(mean) * next_normal();
  return draw <= 0.0 ? 0 : static_cast<long long>(std::llround(draw));
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
  std::uint64_t state = root ^ (fnv1a64(label) + 0x632be59bd9b4e019ull);
  splitmix64(state);
  return splitmix64(state);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t state = root ^ (index * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
  splitmix64(state);
  return splitmix64(state);
}

}  // namespace afcmem
