#pragma once

#include <cmath>
#include <cstdint>

#include "css/types.hpp"

namespace css {

// Deterministic generator with explicit distribution code so datasets are
// byte-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  // splitmix64
  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Box-Muller; one value per call, no caching, for reproducibility.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vec3 normal3() {
    const double a = normal(), b = normal(), c = normal();
    return Vec3(a, b, c);
  }

  Vec3 unit_vector() {
    Vec3 v;
    do {
      v = normal3();
    } while (v.norm() < 1e-9);
    return v.normalized();
  }

  Rng fork(uint64_t stream) {
    Rng child(next() ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    return child;
  }

 private:
  uint64_t state_;
};

}  // namespace css
