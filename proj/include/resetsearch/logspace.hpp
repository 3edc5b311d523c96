#pragma once

// Log-domain scalar helpers. Quantities that grow like exp(K |a|^(l+1))
// overflow double well inside the supported parameter range, so every
// accumulation in the library is carried as a natural log.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace resetsearch {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// log(e^a + e^b), safe for -inf arguments.
inline double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(1 - e^x) for x < 0, stable near both ends.
inline double log1mexp(double x) {
  if (x >= 0.0) return x == 0.0 ? kNegInf : std::numeric_limits<double>::quiet_NaN();
  static const double kLn2 = std::log(2.0);
  return x < -kLn2 ? std::log1p(-std::exp(x)) : std::log(-std::expm1(x));
}

// log(e^a - e^b); requires a >= b. Returns -inf when a == b.
inline double logsubexp(double a, double b) {
  if (b == kNegInf) return a;
  if (a == b) return kNegInf;
  return a + log1mexp(b - a);
}

inline double logsumexp(const std::vector<double>& v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

// log(sinh x) and log(cosh x) without overflow for large x.
inline double log_sinh(double x) {
  static const double kLn2 = std::log(2.0);
  if (x < 0.02) return std::log(std::sinh(x));  // sinh has no cancellation for x > 0
  return x + log1mexp(-2.0 * x) - kLn2;
}

inline double log_cosh(double x) {
  static const double kLn2 = std::log(2.0);
  x = std::fabs(x);
  return x + std::log1p(std::exp(-2.0 * x)) - kLn2;
}

}  // namespace resetsearch
