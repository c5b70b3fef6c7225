#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "tsngcl/error.hpp"

namespace tsngcl {

inline std::int64_t ceil_div(std::int64_t num, std::int64_t den) {
  if (den <= 0) throw Error(ErrorCode::ConfigError, "ceil_div by non-positive denominator");
  if (num >= 0) return (num + den - 1) / den;
  return -((-num) / den);
}

inline std::int64_t checked_lcm(std::int64_t a, std::int64_t b) {
  const std::int64_t g = std::gcd(a, b);
  const __int128 v = static_cast<__int128>(a / g) * b;
  if (v > std::numeric_limits<std::int64_t>::max())
    throw Error(ErrorCode::ConfigError, "hyperperiod overflows 64-bit range");
  return static_cast<std::int64_t>(v);
}

/// Ascending list of positive divisors of n.
inline std::vector<std::int64_t> divisors(std::int64_t n) {
  std::vector<std::int64_t> low, high;
  for (std::int64_t d = 1; d * d <= n; ++d) {
    if (n % d != 0) continue;
    low.push_back(d);
    if (d != n / d) high.push_back(n / d);
  }
  low.insert(low.end(), high.rbegin(), high.rend());
  return low;
}

inline std::int64_t narrow_int64(__int128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw Error(ErrorCode::ConfigError, "integer overflow in exact area computation");
  return static_cast<std::int64_t>(v);
}

/// Rounds a non-negative real quantity up to a multiple of `step`, tolerating
/// floating-point noise just above an exact multiple.
inline double ceil_to_step(double value, double step) {
  if (!std::isfinite(value)) return value;
  const double q = value / step;
  const double r = std::round(q);
  if (std::abs(q - r) < 1e-9) return r * step;
  return std::ceil(q) * step;
}

}  // namespace tsngcl
