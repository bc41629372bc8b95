#include "fcxl/random.hpp"

#include "fcxl/error.hpp"

namespace fcxl {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed) ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL)) {}

std::uint64_t Rng::next_u64() {
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c));
}

Rng Rng::split(std::uint64_t stream) const {
  Rng child(0);
  child.key_ = mix64(key_ ^ mix64(stream ^ 0xA0761D6478BD642FULL));
  return child;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error("bad-range", "empty sampling range");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  while (true) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % n;
  }
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw Error("bad-range", "empty integer range");
  return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw Error("bad-weights", "negative categorical weight");
    total += w;
  }
  if (weights.empty() || total <= 0.0) throw Error("bad-weights", "categorical weights sum to zero");
  const double r = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (r < acc) return i;
  }
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace fcxl
