#pragma once

#include <cmath>
#include <numbers>

namespace bleloc {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kSqrt2Pi = 2.506628274631000502415765284811;  // sqrt(2*pi)

/// Standard normal density.
inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

/// Standard normal CDF, Phi(x).
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

/// log Phi(x), stable for large negative x.
///
/// erfc underflows below roughly x = -38; switch to the asymptotic
/// expansion of Mills' ratio well before that.
inline double log_norm_cdf(double x) {
  if (x > -15.0) {
    return std::log(norm_cdf(x));
  }
  // Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
  const double z2 = x * x;
  const double z4 = z2 * z2;
  const double series = 1.0 - 1.0 / z2 + 3.0 / z4 - 15.0 / (z4 * z2) + 105.0 / (z4 * z4) -
                        945.0 / (z4 * z4 * z2) + 10395.0 / (z4 * z4 * z4);
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-x) + std::log(series);
}

/// Inverse Mills ratio phi(x)/Phi(x); the EP probit moment updates need it
/// far into the left tail where the naive quotient is 0/0.
inline double gauss_over_cdf(double x) {
  return std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - log_norm_cdf(x));
}

}  // namespace bleloc
