#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace tfsep {

// Seeded generator with distributions implemented in-house so that streams
// are bit-identical across platforms and standard libraries.  mt19937_64 has
// a fixed output sequence by the standard; std::normal_distribution does not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per call (the paired value is discarded to keep
  // the stream position easy to reason about).
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  std::complex<double> gaussian_complex() {
    const double re = gaussian();
    const double im = gaussian();
    return {re, im};
  }

  std::uint64_t next_u64() { return gen_(); }

  // Derive an independent stream, e.g. one per channel or per source.
  Rng fork(std::uint64_t salt) {
    return Rng(gen_() ^ (salt * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tfsep
