#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace replisim {

// Stable 64-bit hash/mix primitives; used for stream forking and for
// deterministic per-entity draws that must not depend on draw order.
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic random source. All draws are implemented on top of the raw
// 64-bit generator output so a given seed produces the same sequence on any
// platform; std::uniform_*_distribution is deliberately avoided because its
// algorithm is implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  // Derives an independent stream. Subsystems each fork their own stream so
  // draw interleaving in one module cannot perturb another.
  SeededRng fork(std::string_view label) const;

  std::uint64_t nextU64();

  // Inclusive bounds. pre: lo <= hi.
  std::int64_t uniformInt(std::int64_t lo, std::int64_t hi);

  // Uniform in [lo, hi).
  double uniformReal(double lo, double hi);

  // Uniform index in [0, n). pre: n > 0.
  std::size_t index(std::size_t n);

  // Bernoulli with probability p.
  bool chance(double p);

  // Standard normal via Box-Muller on explicit uniform draws.
  double normal();

  // Log-normal parameterized by its median and the sigma of the underlying
  // normal. median > 0.
  double logNormalMedian(double median, double sigma);

  // n random bytes rendered as lowercase hex (2n characters).
  std::string hexBytes(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace replisim
