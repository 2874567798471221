#pragma once

#include <cstdint>
#include <random>

namespace qpyramid {

// Seedable, splittable generator. The engine is std::mt19937_64 (bit-exact
// across standard libraries); every variate is derived here rather than
// through <random> distributions so draws are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Independent stream for (seed, index): chain c of a run uses stream(seed, c).
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  // Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // log of a Gamma(shape, 1) variate; stays finite for tiny shapes.
  double log_gamma_variate(double shape);
  double beta(double a, double b);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace qpyramid
