#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ssgait {

// Seeded random stream. Every run draws all randomness from one root seed
// through named sub-streams ("data", "init", "sampling", ...) so that paired
// experiments can vary one stream while holding the others fixed.
//
// Stream derivation hashes the parent's seed material, never its generator
// state, so the derivation is independent of draw order. Distributions are
// implemented by hand on top of mt19937_64 instead of the <random>
// distribution templates, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Derived stream labelled by name.
  Rng stream(std::string_view name) const;
  // Derived stream indexed by up to three integers (identity, sequence, ...).
  Rng at(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal();

  // Uniform integer in [lo, hi] inclusive, rejection-sampled.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(uniform_int(0, i))]);
    }
  }

 private:
  explicit Rng(std::uint64_t material, bool derived);

  std::mt19937_64 gen_;
  std::uint64_t material_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace ssgait
