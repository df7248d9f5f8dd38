#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "autoad/detail/stats.hpp"

namespace autoad {

/// Anomaly probability of a standardized deviation: one minus the two-sided
/// Gaussian tail, i.e. P(|Z| < |z|). Shared by every scorer.
inline double anomaly_probability_from_z(double z) {
  if (std::isnan(z)) return 1.0;
  return std::erf(std::abs(z) / std::numbers::sqrt2);
}

/// |z| that produces the given anomaly probability.
inline double z_from_anomaly_probability(double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return detail::normal_quantile(0.5 + 0.5 * p);
}

/// Below this standard deviation a forecast is treated as degenerate.
inline constexpr double kDegenerateStd = 1e-12;

/// A degenerate std yields 1 for any deviation from the mean and 0 otherwise.
inline double anomaly_probability(double observed, double mean, double std) {
  if (!(std > kDegenerateStd)) return observed == mean ? 0.0 : 1.0;
  return anomaly_probability_from_z((observed - mean) / std);
}

}  // namespace autoad
