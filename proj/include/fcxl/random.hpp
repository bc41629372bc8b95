#pragma once

#include <cstdint>
#include <span>

namespace fcxl {

/// Counter-based generator: output i is a pure function of (key, i), so
/// streams are platform independent and can be split without shared state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  std::uint64_t below(std::uint64_t n);   // [0, n), unbiased
  int uniform_int(int lo, int hi);        // [lo, hi] inclusive
  bool bernoulli(double p);
  /// Index drawn proportionally to the (non-negative) weights.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace fcxl
