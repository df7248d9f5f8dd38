#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "autoad/detail/stats.hpp"
#include "autoad/error.hpp"
#include "autoad/series.hpp"

namespace autoad {

struct FourierTerm {
  double frequency = 0.0;  ///< cycles per step
  double power = 0.0;

  bool operator==(const FourierTerm&) const = default;
};

/// Hann-tapered periodogram |DFT|^2 / sum(w^2) of the mean-removed series
/// at bins k = 1 .. n/2 (index 0 of the result is bin 1).
inline std::vector<double> periodogram(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return {};
  const double m = detail::mean(x);
  std::vector<double> w(n), xw(n);
  double wsum2 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    w[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n - 1));
    xw[t] = w[t] * (x[t] - m);
    wsum2 += w[t] * w[t];
  }
  std::vector<double> cos_table(n), sin_table(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    cos_table[j] = std::cos(angle);
    sin_table[j] = std::sin(angle);
  }
  const std::size_t bins = n / 2;
  std::vector<double> power(bins);
  for (std::size_t k = 1; k <= bins; ++k) {
    double re = 0.0, im = 0.0;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      re += xw[t] * cos_table[idx];
      im -= xw[t] * sin_table[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    power[k - 1] = (re * re + im * im) / wsum2;
  }
  return power;
}

/// Up to `l_max` spectral peaks above `noise_floor_multiplier` x the median
/// power, strongest first. Peaks are located on the 3-bin averaged periodogram
/// and reported at the strongest raw bin of the peak. The Nyquist bin is never selected.
inline std::vector<FourierTerm> select_fourier_frequencies(const TimeSeries& ts, std::size_t l_max,
                                                           double noise_floor_multiplier = 10.0) {
  if (!ts.complete()) throw Error(ErrorKind::InvalidArgument, "spectral selection requires an imputed series");
  if (l_max == 0) return {};
  if (ts.size() < 2 * l_max) throw Error(ErrorKind::SeriesTooShort, "series shorter than 2 * l_max");
  const auto raw = periodogram(ts.values());
  const std::size_t bins = raw.size();
  if (bins < 3) return {};
  std::vector<double> smoothed(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = std::min(bins - 1, k + 1);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += raw[j];
    smoothed[k] = s / static_cast<double>(hi - lo + 1);
  }
  const double floor = noise_floor_multiplier * detail::median(smoothed);

  const double n = static_cast<double>(ts.size());
  std::vector<FourierTerm> peaks;
  std::vector<std::size_t> used;
  // The Nyquist ordinate of a real series has one degree of freedom, so its
  // noise tail is too heavy to compare against the floor.
  const std::size_t candidates = 2 * bins == ts.size() ? bins - 1 : bins;
  for (std::size_t k = 0; k < candidates; ++k) {
    const bool left_ok = k == 0 || smoothed[k] > smoothed[k - 1];
    const bool right_ok = k + 1 == bins || smoothed[k] >= smoothed[k + 1];
    if (!(left_ok && right_ok) || !(smoothed[k] > floor)) continue;
    std::size_t best = k;
    if (k > 0 && raw[k - 1] > raw[best]) best = k - 1;
    if (k + 1 < bins && raw[k + 1] > raw[best]) best = k + 1;
    if (std::find(used.begin(), used.end(), best) != used.end()) continue;
    used.push_back(best);
    peaks.push_back({static_cast<double>(best + 1) / n, raw[best]});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const FourierTerm& a, const FourierTerm& b) {
    return a.power > b.power;
  });
  if (peaks.size() > l_max) peaks.resize(l_max);
  return peaks;
}

}  // namespace autoad
