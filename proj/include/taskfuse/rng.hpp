#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace taskfuse {

// Uniform double in (0, 1] from the top 53 bits of one mt19937_64 draw.
inline double uniform53(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

// Standard normals via Box-Muller on 53-bit uniforms. mt19937_64 and this
// transform are both pinned algorithms, so the stream reproduces across
// platforms for a given seed. Draws are consumed in pairs; the second value
// of each pair is cached.
class NormalSampler {
 public:
  explicit NormalSampler(std::mt19937_64& rng) : rng_(rng) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform53(rng_);
    double u2 = uniform53(rng_);
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64& rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace taskfuse
