#include "replisim/rng.hpp"

#include <cmath>
#include <numbers>

namespace replisim {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

SeededRng SeededRng::fork(std::string_view label) const {
  return SeededRng(splitmix64(seed_ ^ fnv1a64(label)));
}

std::uint64_t SeededRng::nextU64() { return gen_(); }

std::int64_t SeededRng::uniformInt(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(nextU64());  // full range
  return lo + static_cast<std::int64_t>(nextU64() % span);
}

double SeededRng::uniformReal(double lo, double hi) {
  const double unit = static_cast<double>(nextU64() >> 11) * 0x1.0p-53;
  return lo + unit * (hi - lo);
}

std::size_t SeededRng::index(std::size_t n) {
  return static_cast<std::size_t>(nextU64() % n);
}

bool SeededRng::chance(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniformReal(0.0, 1.0) < p;
}

double SeededRng::normal() {
  // Box-Muller; u1 nudged away from zero so log() stays finite.
  double u1 = uniformReal(0.0, 1.0);
  double u2 = uniformReal(0.0, 1.0);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double SeededRng::logNormalMedian(double median, double sigma) {
  return median * std::exp(sigma * normal());
}

std::string SeededRng::hexBytes(std::size_t n) {
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = static_cast<unsigned>(nextU64() & 0xff);
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

}  // namespace replisim
