#pragma once

#include <cstdint>
#include <random>

namespace mhsp {

// mt19937_64 is fully specified by the standard; the draws below avoid the
// library-defined std distributions so seeded streams match everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi] by rejection, so no modulo bias.
  std::int64_t integer(std::int64_t lo, std::int64_t hi);
  // Standard normal by the Box-Muller transform.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mhsp
