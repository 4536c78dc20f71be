#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace heavysum {

/// Reduce a real number to [0,1).
inline double wrap01(double y) noexcept {
  double r = y - std::floor(y);
  return r >= 1.0 ? 0.0 : r;
}

/// Arc distance on the unit circle R/Z, in [0, 1/2].
inline double circle_distance(double a, double b) noexcept {
  double d = std::fabs(wrap01(a) - wrap01(b));
  return d > 0.5 ? 1.0 - d : d;
}

/// Signed offset v in [-1/2, 1/2) with a + v == b (mod 1).
inline double circle_offset(double a, double b) noexcept {
  double v = wrap01(b - a);
  return v >= 0.5 ? v - 1.0 : v;
}

// Points of the circle as 64-bit binary fractions: u represents u * 2^-64.
// Subtraction wraps modulo 2^64, which is exactly the circle group law.
using Fixed = std::uint64_t;

inline constexpr double kFixedUnit = 0x1.0p-64;

inline Fixed to_fixed(double y) noexcept {
  double w = wrap01(y);
  long double scaled = std::ldexp(static_cast<long double>(w), 64);
  if (scaled >= 18446744073709551616.0L) return std::numeric_limits<Fixed>::max();
  return static_cast<Fixed>(scaled);
}

inline double fixed_to_double(Fixed u) noexcept { return static_cast<double>(u) * kFixedUnit; }

/// Arc distance in units of 2^-64.
inline constexpr Fixed fixed_distance(Fixed a, Fixed b) noexcept {
  Fixed d1 = a - b;
  Fixed d2 = b - a;
  return d1 < d2 ? d1 : d2;
}

/// Radius r in [0, 1/2] as a count of 2^-64 units (saturating).
inline Fixed radius_to_fixed(double r) noexcept {
  if (!(r > 0.0)) return 0;
  if (r >= 0.5) return Fixed{1} << 63;
  return static_cast<Fixed>(std::ldexp(static_cast<long double>(r), 64));
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace heavysum
