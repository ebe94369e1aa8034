#include "ssgait/rng.hpp"

#include <cmath>

namespace ssgait {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) : Rng(splitmix64(seed), true) {}

Rng::Rng(std::uint64_t material, bool) : gen_(material), material_(material) {}

Rng Rng::stream(std::string_view name) const {
  return Rng(splitmix64(material_ ^ fnv1a64(name)), true);
}

Rng Rng::at(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  std::uint64_t m = material_;
  m = splitmix64(m ^ splitmix64(a + 1));
  m = splitmix64(m ^ splitmix64(b + 2));
  m = splitmix64(m ^ splitmix64(c + 3));
  return Rng(m, true);
}

double Rng::normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(gen_());  // full 64-bit range
  const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % span);
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

}  // namespace ssgait
