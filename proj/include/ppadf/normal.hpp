#pragma once

#include <cmath>
#include <numbers>

namespace ppadf {

inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// P(X > x), accurate in the upper tail.
inline double std_normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Phi(b) - Phi(a) for a <= b without cancellation when both points sit in
/// the same tail.
inline double std_normal_mass(double a, double b) {
  if (a >= 0.0) return std_normal_sf(a) - std_normal_sf(b);
  if (b <= 0.0) return std_normal_cdf(b) - std_normal_cdf(a);
  return 1.0 - std_normal_cdf(a) - std_normal_sf(b);
}

double std_normal_quantile(double p);

}  // namespace ppadf
