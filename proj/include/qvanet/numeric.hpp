#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace qvanet {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % n);
}

// m^x mod n by square-and-multiply.
inline std::uint64_t modexp(std::uint64_t m, std::uint64_t x, std::uint64_t n) {
  if (n < 2) throw std::invalid_argument("modexp: modulus must be >= 2");
  std::uint64_t result = 1 % n;
  std::uint64_t base = m % n;
  while (x > 0) {
    if (x & 1) result = mulmod(result, base, n);
    base = mulmod(base, base, n);
    x >>= 1;
  }
  return result;
}

// Extended Euclid: returns (g, x, y) with a*x + b*y = g = gcd(a, b).
inline std::tuple<std::int64_t, std::int64_t, std::int64_t> extended_gcd(std::int64_t a,
                                                                         std::int64_t b) {
  std::int64_t old_r = a, r = b;
  std::int64_t old_s = 1, s = 0;
  std::int64_t old_t = 0, t = 1;
  while (r != 0) {
    const std::int64_t q = old_r / r;
    std::tie(old_r, r) = std::pair{r, old_r - q * r};
    std::tie(old_s, s) = std::pair{s, old_s - q * s};
    std::tie(old_t, t) = std::pair{t, old_t - q * t};
  }
  return {old_r, old_s, old_t};
}

// Modular inverse of a mod n; throws if gcd(a, n) != 1.
inline std::uint64_t mod_inverse(std::uint64_t a, std::uint64_t n) {
  const auto [g, x, y] = extended_gcd(static_cast<std::int64_t>(a % n), static_cast<std::int64_t>(n));
  (void)y;
  if (g != 1) throw std::invalid_argument("mod_inverse: arguments are not coprime");
  std::int64_t inv = x % static_cast<std::int64_t>(n);
  if (inv < 0) inv += static_cast<std::int64_t>(n);
  return static_cast<std::uint64_t>(inv);
}

// Deterministic trial division; fine for the small moduli this project handles.
inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

inline unsigned bit_length(std::uint64_t n) {
  unsigned bits = 0;
  while (n > 0) {
    ++bits;
    n >>= 1;
  }
  return bits;
}

// Largest b with b^k <= n.
inline std::uint64_t integer_kth_root(std::uint64_t n, unsigned k) {
  if (k == 0) throw std::invalid_argument("integer_kth_root: k must be >= 1");
  if (k == 1 || n < 2) return n;
  std::uint64_t lo = 1, hi = n;
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo + 1) / 2;
    unsigned __int128 p = 1;
    bool overflow = false;
    for (unsigned i = 0; i < k; ++i) {
      p *= mid;
      if (p > n) {
        overflow = true;
        break;
      }
    }
    if (!overflow && p <= n) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

// If n = b^k for some k >= 2, returns b (smallest such base).
inline std::optional<std::uint64_t> perfect_power_base(std::uint64_t n) {
  if (n < 4) return std::nullopt;
  for (unsigned k = bit_length(n); k >= 2; --k) {
    const std::uint64_t b = integer_kth_root(n, k);
    if (b < 2) continue;
    unsigned __int128 p = 1;
    for (unsigned i = 0; i < k; ++i) p *= b;
    if (p == n) return b;
  }
  return std::nullopt;
}

// Continued-fraction expansion of num/den and the list of convergent
// denominators, in order of appearance.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> convergents(std::uint64_t num,
                                                                        std::uint64_t den) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  std::uint64_t n = num, d = den;
  std::uint64_t h1 = 1, h2 = 0;  // numerators
  std::uint64_t k1 = 0, k2 = 1;  // denominators
  while (d != 0) {
    const std::uint64_t a = n / d;
    const std::uint64_t h = a * h1 + h2;
    const std::uint64_t k = a * k1 + k2;
    out.emplace_back(h, k);
    h2 = h1;
    h1 = h;
    k2 = k1;
    k1 = k;
    const std::uint64_t r = n % d;
    n = d;
    d = r;
  }
  return out;
}

}  // namespace qvanet
