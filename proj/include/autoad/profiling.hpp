#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "autoad/changepoint.hpp"
#include "autoad/detail/stats.hpp"
#include "autoad/series.hpp"
#include "autoad/spectrum.hpp"

namespace autoad {

struct DataProfile {
  std::vector<std::size_t> change_points;
  std::vector<std::size_t> trend_changes;
  int diff_order = 0;
  double skewness = 0.0;
  bool log_recommended = false;
  std::vector<FourierTerm> fourier_terms;
  double missing_fraction = 0.0;
};

struct ProfileOptions {
  ImputePolicy impute{};
  /// Change-point penalty; 3 ln n scaled by serial_penalty_factor when unset.
  std::optional<double> change_penalty;
  /// Minimum change-point segment; max(5, n / 20) when unset.
  std::optional<std::size_t> min_segment;
  /// Trend window; max(10, n / 20) when unset.
  std::optional<std::size_t> trend_window;
  double trend_slope_z = 4.0;
  int max_d = 2;
  std::size_t l_max = 3;
  double noise_floor_multiplier = 10.0;
  double skew_threshold = 1.5;
};

/// impute -> change/trend detection -> stationarize -> skewness/log decision -> spectral peaks.
/// Detectors that need more data than the series holds report nothing.
inline DataProfile profile(const TimeSeries& raw, const ProfileOptions& options = {}) {
  DataProfile out;
  out.missing_fraction = raw.missing_fraction();
  const TimeSeries ts = impute(raw, options.impute);
  const std::size_t n = ts.size();

  const std::size_t min_segment = options.min_segment.value_or(std::max<std::size_t>(5, n / 20));
  if (n >= 2 * min_segment) {
    // A seasonal cycle is not a sequence of level shifts: spectral peaks with
    // at least three cycles in the sample are removed first. A step has a
    // smooth low-frequency spectrum, so it produces no such peak.
    std::vector<double> deseasoned(ts.values().begin(), ts.values().end());
    if (options.l_max > 0 && n >= 2 * options.l_max)
      for (const auto& term : select_fourier_frequencies(ts, options.l_max, options.noise_floor_multiplier))
        if (term.frequency * static_cast<double>(n) >= 3.0) detail::remove_sinusoid(deseasoned, term.frequency);
    // Autocorrelated noise looks like a run of small shifts to an iid cost.
    const double penalty =
        options.change_penalty.value_or(default_change_penalty(n) * serial_penalty_factor(deseasoned));
    out.change_points = detect_change_points(ts.with_values(std::move(deseasoned)), penalty, min_segment);
  }

  const std::size_t trend_window = options.trend_window.value_or(std::max<std::size_t>(10, n / 20));
  if (n >= 2 * trend_window) out.trend_changes = detect_trend_changes(ts, trend_window, options.trend_slope_z);

  std::optional<TimeSeries> stationary;
  if (n >= 20) {
    auto st = stationarize(ts, options.max_d);
    out.diff_order = st.d;
    stationary = std::move(st.series);
  }

  out.skewness = detail::skewness(ts.values());
  const bool positive = std::all_of(ts.values().begin(), ts.values().end(), [](double v) { return v > 0.0; });
  out.log_recommended = positive && std::abs(out.skewness) > options.skew_threshold;

  const TimeSeries& spectral_input = stationary ? *stationary : ts;
  if (options.l_max > 0 && spectral_input.size() >= 2 * options.l_max)
    out.fourier_terms = select_fourier_frequencies(spectral_input, options.l_max, options.noise_floor_multiplier);
  return out;
}

}  // namespace autoad
