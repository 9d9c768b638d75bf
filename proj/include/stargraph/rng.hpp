#pragma once

#include <cstdint>
#include <random>

namespace stargraph {

// Deterministic uniform stream. The mapping from raw 64-bit draws to doubles
// is pinned here (not delegated to std distributions) so seeded experiments
// reproduce across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [lo, hi). 53 mantissa bits per draw.
  double uniform(double lo, double hi) {
    const double u = double(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace stargraph
