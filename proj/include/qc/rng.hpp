#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace qc {

// Seeded RNG with hand-rolled distributions. std::uniform_real_distribution and
// friends are implementation-defined, so drawing directly from the (standardized)
// mt19937_64 stream keeps every seeded run bitwise reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one fresh pair of uniforms per draw.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t integer(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector() {
    while (true) {
      Eigen::Vector3d v{normal(), normal(), normal()};
      double norm = v.norm();
      if (norm > 1e-12) return v / norm;
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stream splitter: decorrelates derived seeds (epoch/sample streams etc.).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace qc
