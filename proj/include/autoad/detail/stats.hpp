#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

namespace autoad::detail {

inline double mean(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population variance (divides by n), two-pass.
inline double variance(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

/// Unbiased sample variance (divides by n - 1).
inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return variance(x) * static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
}

inline double median(std::vector<double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  const double upper = x[mid];
  if (x.size() % 2 == 1) return upper;
  const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double median_absolute_deviation(std::span<const double> x) {
  const double med = median(std::vector<double>(x.begin(), x.end()));
  std::vector<double> dev;
  dev.reserve(x.size());
  for (double v : x) dev.push_back(std::abs(v - med));
  return median(std::move(dev));
}

/// MAD scaled to be consistent for the Gaussian standard deviation.
inline double robust_std(std::span<const double> x) { return 1.4826 * median_absolute_deviation(x); }

/// Third standardized moment; zero for a series without spread.
inline double skewness(std::span<const double> x) {
  if (x.size() < 3) return 0.0;
  const double m = mean(x);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

/// Lag-1 sample autocorrelation; zero when the series has no spread.
inline double lag1_autocorrelation(std::span<const double> x) {
  if (x.size() < 3) return 0.0;
  const double m = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - m;
    den += d * d;
    if (i > 0) num += d * (x[i - 1] - m);
  }
  if (den <= 0.0) return 0.0;
  return num / den;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Acklam's rational approximation refined by one Halley step.
inline double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// Ordinary least squares slope of y against 0..n-1 with its standard error.
struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double residual_variance = 0.0;
};

inline SlopeFit fit_slope(std::span<const double> y) {
  SlopeFit fit;
  const std::size_t n = y.size();
  if (n < 3) return fit;
  const double tbar = 0.5 * static_cast<double>(n - 1);
  const double ybar = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tbar;
    sxx += dt * dt;
    sxy += dt * (y[i] - ybar);
  }
  fit.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - ybar - fit.slope * (static_cast<double>(i) - tbar);
    rss += r * r;
  }
  fit.residual_variance = rss / static_cast<double>(n - 2);
  fit.std_error = std::sqrt(fit.residual_variance / sxx);
  return fit;
}

}  // namespace autoad::detail
