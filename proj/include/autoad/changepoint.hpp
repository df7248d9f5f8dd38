#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "autoad/detail/stats.hpp"
#include "autoad/error.hpp"
#include "autoad/series.hpp"
#include "autoad/spectrum.hpp"

namespace autoad {

namespace detail {

// Prefix sums for O(1) Gaussian segment costs. The segment mean is a local
// line, so a pure trend costs the same split or unsplit and never triggers.
class SegmentCost {
 public:
  explicit SegmentCost(std::span<const double> y) : n_(y.size()) {
    const double tc = 0.5 * static_cast<double>(n_ - 1);
    const double yc = mean(y);
    s_t_.assign(n_ + 1, 0.0);
    s_tt_.assign(n_ + 1, 0.0);
    s_y_.assign(n_ + 1, 0.0);
    s_yy_.assign(n_ + 1, 0.0);
    s_ty_.assign(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double t = static_cast<double>(i) - tc;
      const double v = y[i] - yc;
      s_t_[i + 1] = s_t_[i] + t;
      s_tt_[i + 1] = s_tt_[i] + t * t;
      s_y_[i + 1] = s_y_[i] + v;
      s_yy_[i + 1] = s_yy_[i] + v * v;
      s_ty_[i + 1] = s_ty_[i] + t * v;
    }
    floor_ = std::max(1e-10 * variance(y), std::numeric_limits<double>::min());
  }

  /// -2 log-likelihood (up to constants) of y[a, b) under a Gaussian with linear mean.
  double operator()(std::size_t a, std::size_t b) const {
    const double m = static_cast<double>(b - a);
    const double st = s_t_[b] - s_t_[a];
    const double stt = s_tt_[b] - s_tt_[a];
    const double sy = s_y_[b] - s_y_[a];
    const double syy = s_yy_[b] - s_yy_[a];
    const double sty = s_ty_[b] - s_ty_[a];
    const double sxx = stt - st * st / m;
    const double sxy = sty - st * sy / m;
    double rss = syy - sy * sy / m;
    if (sxx > 0.0) rss -= sxy * sxy / sxx;
    const double var = std::max(rss / m, floor_);
    return m * std::log(var);
  }

 private:
  std::size_t n_;
  std::vector<double> s_t_, s_tt_, s_y_, s_yy_, s_ty_;
  double floor_;
};

}  // namespace detail

/// Default penalty 3 ln n.
inline double default_change_penalty(std::size_t n) { return 3.0 * std::log(static_cast<double>(n)); }

/// Long-run variance factor (1 + phi) / (1 - phi) of an AR(1) fit, with phi
/// read from the lag-1 autocorrelation of first differences (-(1 - phi) / 2),
/// which a level shift barely moves. Clamped to phi in [0, 0.9].
inline double serial_penalty_factor(std::span<const double> x) {
  if (x.size() < 4) return 1.0;
  const auto dx = difference(x);
  if (!(detail::variance(dx) > 0.0)) return 1.0;
  const double phi = std::clamp(1.0 + 2.0 * detail::lag1_autocorrelation(dx), 0.0, 0.9);
  return (1.0 + phi) / (1.0 - phi);
}

/// Binary segmentation. Returns the first index of every new segment, ascending.
inline std::vector<std::size_t> detect_change_points(const TimeSeries& ts, double penalty,
                                                     std::size_t min_segment = 5) {
  if (min_segment < 5) throw Error(ErrorKind::InvalidArgument, "min_segment must be >= 5");
  if (!ts.complete()) throw Error(ErrorKind::InvalidArgument, "change-point detection requires an imputed series");
  const std::size_t n = ts.size();
  if (n < 2 * min_segment) throw Error(ErrorKind::SeriesTooShort, "series shorter than two minimum segments");

  const detail::SegmentCost cost(ts.values());
  std::vector<std::size_t> found;
  struct Segment {
    std::size_t a, b;
  };
  std::vector<Segment> pending{{0, n}};
  while (!pending.empty()) {
    const Segment seg = pending.back();
    pending.pop_back();
    if (seg.b - seg.a < 2 * min_segment) continue;
    const double whole = cost(seg.a, seg.b);
    double best_gain = -std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = seg.a + min_segment; k + min_segment <= seg.b; ++k) {
      const double gain = whole - cost(seg.a, k) - cost(k, seg.b);
      if (gain > best_gain) best_gain = gain, best_k = k;
    }
    if (best_gain > penalty) {
      found.push_back(best_k);
      pending.push_back({seg.a, best_k});
      pending.push_back({best_k, seg.b});
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

/// Indices where least-squares slopes of the adjacent windows [i-w, i) and
/// [i, i+w) differ by more than `slope_z` combined standard errors. Flagged
/// indices are thinned by non-maximum suppression over +-window.
inline std::vector<std::size_t> detect_trend_changes(const TimeSeries& ts, std::size_t window, double slope_z) {
  if (window < 10) throw Error(ErrorKind::InvalidArgument, "trend window must be >= 10");
  if (!ts.complete()) throw Error(ErrorKind::InvalidArgument, "trend detection requires an imputed series");
  const std::size_t n = ts.size();
  if (n < 2 * window) throw Error(ErrorKind::SeriesTooShort, "series shorter than two trend windows");
  const auto y = ts.values();
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double slope_scale = (*hi_it - *lo_it) / static_cast<double>(n);
  const double negligible = 1e-9 * slope_scale + std::numeric_limits<double>::min();

  struct Candidate {
    std::size_t index;
    double strength;
    double magnitude;
  };
  std::vector<Candidate> flagged;
  for (std::size_t i = window; i + window <= n; ++i) {
    const auto left = detail::fit_slope(y.subspan(i - window, window));
    const auto right = detail::fit_slope(y.subspan(i, window));
    const double diff = std::abs(right.slope - left.slope);
    const double se = std::hypot(left.std_error, right.std_error);
    if (diff <= negligible || diff <= slope_z * se) continue;
    const double strength = se > 0.0 ? diff / se : std::numeric_limits<double>::infinity();
    flagged.push_back({i, strength, diff});
  }
  std::sort(flagged.begin(), flagged.end(), [](const Candidate& a, const Candidate& b) {
    if (a.strength != b.strength) return a.strength > b.strength;
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.index < b.index;
  });
  std::vector<std::size_t> kept;
  for (const auto& c : flagged) {
    const bool near = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return (c.index > k ? c.index - k : k - c.index) <= window;
    });
    if (!near) kept.push_back(c.index);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct Stationarized {
  TimeSeries series;
  int d = 0;
};

namespace detail {

// Least-squares removal of one sinusoid at `cycles_per_step`.
inline void remove_sinusoid(std::vector<double>& r, double cycles_per_step) {
  const std::size_t n = r.size();
  const double w = 2.0 * std::numbers::pi * cycles_per_step;
  double cc = 0.0, ss = 0.0, cs = 0.0, yc = 0.0, ys = 0.0;
  const double m = mean(r);
  for (std::size_t t = 0; t < n; ++t) {
    const double c = std::cos(w * static_cast<double>(t)), s = std::sin(w * static_cast<double>(t));
    cc += c * c, ss += s * s, cs += c * s;
    yc += (r[t] - m) * c, ys += (r[t] - m) * s;
  }
  const double det = cc * ss - cs * cs;
  if (!(std::abs(det) > 0.0)) return;
  const double a = (yc * ss - ys * cs) / det, b = (ys * cc - yc * cs) / det;
  for (std::size_t t = 0; t < n; ++t)
    r[t] -= a * std::cos(w * static_cast<double>(t)) + b * std::sin(w * static_cast<double>(t));
}

// Removes up to three strong periodic components (at least three cycles in
// the sample, power above 10x the median bin) by least squares, so a smooth
// seasonal cycle is not mistaken for a unit root.
inline std::vector<double> remove_periodic(std::span<const double> x) {
  std::vector<double> r(x.begin(), x.end());
  const std::size_t n = r.size();
  if (n < 12) return r;
  for (int pass = 0; pass < 3; ++pass) {
    const auto power = periodogram(r);
    const double floor = 10.0 * median(power);
    std::size_t best = 0;
    for (std::size_t k = 2; k < power.size(); ++k)
      if (power[k] > floor && (best == 0 || power[k] > power[best])) best = k;
    if (best == 0) break;
    remove_sinusoid(r, static_cast<double>(best + 1) / static_cast<double>(n));
  }
  return r;
}

// Stationary when, after periodic components are removed, the lag-1
// autocorrelation is below 0.99 and another difference would not at least
// halve the variance.
inline bool looks_stationary(std::span<const double> x) {
  if (x.size() < 3) return true;
  const auto r = remove_periodic(x);
  const double rho = lag1_autocorrelation(r);
  const double var = variance(r);
  const auto dx = difference(r);
  const double dvar = variance(dx);
  return rho < 0.99 && dvar >= 0.5 * var;
}

}  // namespace detail

/// Successive first differencing until the series looks stationary or d = max_d.
/// The differenced series starts d steps after the input.
inline Stationarized stationarize(const TimeSeries& ts, int max_d = 2) {
  if (!ts.complete()) throw Error(ErrorKind::InvalidArgument, "stationarize requires an imputed series");
  if (ts.size() < 20) throw Error(ErrorKind::SeriesTooShort, "stationarize needs at least 20 points");
  std::vector<double> cur(ts.values().begin(), ts.values().end());
  int d = 0;
  while (d < max_d && !detail::looks_stationary(cur)) {
    cur = difference(cur);
    ++d;
  }
  return {TimeSeries(ts.timestamp(static_cast<std::size_t>(d)), ts.step(), std::move(cur), ts.freq()), d};
}

}  // namespace autoad
