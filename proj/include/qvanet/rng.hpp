#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace qvanet {

// Every stochastic choice in the project draws from one of these.
//
// mt19937_64 output is fully specified by the standard; the helpers below
// avoid std::uniform_*_distribution, whose algorithms are
// implementation-defined, so identical seeds give identical streams on any
// platform.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("DetRng::below: n must be > 0");
    const std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = kMax - kMax % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();  // rejection keeps the draw exactly uniform
    return v % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qvanet
