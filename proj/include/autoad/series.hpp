#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autoad/detail/stats.hpp"
#include "autoad/error.hpp"

namespace autoad {

/// Marker for a missing observation.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

enum class Frequency { minutely5, minutely10, hourly, daily, custom };

/// Grid step in seconds implied by a frequency label; nullopt for custom.
constexpr std::optional<std::int64_t> step_of(Frequency f) {
  switch (f) {
    case Frequency::minutely5: return 300;
    case Frequency::minutely10: return 600;
    case Frequency::hourly: return 3600;
    case Frequency::daily: return 86400;
    case Frequency::custom: return std::nullopt;
  }
  return std::nullopt;
}

constexpr std::string_view to_string(Frequency f) {
  switch (f) {
    case Frequency::minutely5: return "minutely5";
    case Frequency::minutely10: return "minutely10";
    case Frequency::hourly: return "hourly";
    case Frequency::daily: return "daily";
    case Frequency::custom: return "custom";
  }
  return "custom";
}

inline Frequency frequency_from_string(std::string_view s) {
  if (s == "minutely5") return Frequency::minutely5;
  if (s == "minutely10") return Frequency::minutely10;
  if (s == "hourly") return Frequency::hourly;
  if (s == "daily") return Frequency::daily;
  if (s == "custom") return Frequency::custom;
  throw Error(ErrorKind::InvalidArgument, "unknown frequency label '" + std::string(s) + "'");
}

/// Label matching a step in seconds, or custom.
constexpr Frequency frequency_for_step(std::int64_t step) {
  for (Frequency f : {Frequency::minutely5, Frequency::minutely10, Frequency::hourly, Frequency::daily}) {
    if (step_of(f) == step) return f;
  }
  return Frequency::custom;
}

/// Uniformly indexed univariate series. Missing entries hold kMissing (NaN).
class TimeSeries {
 public:
  TimeSeries(std::int64_t start_epoch, std::int64_t step, std::vector<double> values,
             std::optional<Frequency> freq = std::nullopt)
      : start_epoch_(start_epoch),
        step_(step),
        values_(std::move(values)),
        freq_(freq.value_or(frequency_for_step(step))) {
    if (step_ <= 0) throw Error(ErrorKind::InvalidArgument, "step must be positive");
    if (values_.empty()) throw Error(ErrorKind::InvalidArgument, "series must hold at least one value");
    if (auto s = step_of(freq_); s && *s != step_) {
      throw Error(ErrorKind::InvalidArgument,
                  "frequency label " + std::string(to_string(freq_)) + " inconsistent with step " +
                      std::to_string(step_));
    }
  }

  /// Series with a unit step starting at epoch 0, for tests and simulations.
  static TimeSeries from_values(std::vector<double> values, std::int64_t step = 3600) {
    return TimeSeries(0, step, std::move(values));
  }

  std::int64_t start_epoch() const noexcept { return start_epoch_; }
  std::int64_t step() const noexcept { return step_; }
  Frequency freq() const noexcept { return freq_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::int64_t timestamp(std::size_t i) const { return start_epoch_ + static_cast<std::int64_t>(i) * step_; }

  std::size_t missing_count() const {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), is_missing));
  }
  double missing_fraction() const {
    return static_cast<double>(missing_count()) / static_cast<double>(values_.size());
  }
  bool complete() const { return missing_count() == 0; }

  /// Same grid origin and step with new values.
  TimeSeries with_values(std::vector<double> values) const {
    return TimeSeries(start_epoch_, step_, std::move(values), freq_);
  }

  /// Contiguous sub-range [first, first + count).
  TimeSeries slice(std::size_t first, std::size_t count) const {
    if (first >= values_.size() || count == 0) throw Error(ErrorKind::InvalidArgument, "empty slice");
    count = std::min(count, values_.size() - first);
    return TimeSeries(timestamp(first), step_,
                      std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                          values_.begin() + static_cast<std::ptrdiff_t>(first + count)),
                      freq_);
  }

  bool operator==(const TimeSeries& other) const {
    if (start_epoch_ != other.start_epoch_ || step_ != other.step_ || freq_ != other.freq_ ||
        values_.size() != other.values_.size())
      return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double a = values_[i], b = other.values_[i];
      if (!(a == b || (is_missing(a) && is_missing(b)))) return false;
    }
    return true;
  }

 private:
  std::int64_t start_epoch_;
  std::int64_t step_;
  std::vector<double> values_;
  Frequency freq_;
};

enum class ImputeMethod { linear, locf, seasonal_naive };

struct ImputePolicy {
  ImputeMethod method = ImputeMethod::linear;
  double max_gap_fraction = 0.5;
  /// Season length in steps; required by seasonal_naive.
  std::size_t period = 0;
};

namespace detail {

inline std::vector<double> interpolate_linear(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  const std::size_t n = out.size();
  std::size_t prev = n;  // index of last observed value
  for (std::size_t i = 0; i < n; ++i) {
    if (is_missing(out[i])) continue;
    if (prev == n) {
      for (std::size_t j = 0; j < i; ++j) out[j] = out[i];
    } else if (i > prev + 1) {
      const double a = out[prev], b = out[i];
      const double span = static_cast<double>(i - prev);
      for (std::size_t j = prev + 1; j < i; ++j) out[j] = a + (b - a) * static_cast<double>(j - prev) / span;
    }
    prev = i;
  }
  for (std::size_t j = prev + 1; j < n; ++j) out[j] = out[prev];
  return out;
}

}  // namespace detail

/// Fills every missing entry; observed values are left untouched.
/// Leading gaps are back-filled from the first observation for every method.
inline TimeSeries impute(const TimeSeries& ts, const ImputePolicy& policy = {}) {
  if (!(policy.max_gap_fraction >= 0.0 && policy.max_gap_fraction <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "max_gap_fraction must lie in [0,1]");
  const std::size_t missing = ts.missing_count();
  if (missing == 0) return ts;
  const std::size_t observed = ts.size() - missing;
  if (observed == 0) throw Error(ErrorKind::AllMissing, "series has no observed values");
  if (ts.missing_fraction() > policy.max_gap_fraction)
    throw Error(ErrorKind::TooManyMissing, "missing fraction " + std::to_string(ts.missing_fraction()) +
                                               " exceeds " + std::to_string(policy.max_gap_fraction));

  std::vector<double> out(ts.values().begin(), ts.values().end());
  switch (policy.method) {
    case ImputeMethod::linear:
      if (observed < 2) throw Error(ErrorKind::AllMissing, "linear interpolation needs two observed values");
      out = detail::interpolate_linear(out);
      break;
    case ImputeMethod::locf: {
      std::size_t first = 0;
      while (is_missing(out[first])) ++first;
      for (std::size_t j = 0; j < first; ++j) out[j] = out[first];
      for (std::size_t i = first + 1; i < out.size(); ++i)
        if (is_missing(out[i])) out[i] = out[i - 1];
      break;
    }
    case ImputeMethod::seasonal_naive: {
      if (policy.period == 0) throw Error(ErrorKind::InvalidArgument, "seasonal_naive needs a period");
      // Values one season back where available, linear interpolation otherwise.
      const std::vector<double> fallback =
          observed >= 2 ? detail::interpolate_linear(out) : std::vector<double>(out.size(), *std::find_if(
                                                                 out.begin(), out.end(), [](double v) {
                                                                   return !is_missing(v);
                                                                 }));
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (!is_missing(out[i])) continue;
        out[i] = (i >= policy.period && !is_missing(out[i - policy.period])) ? out[i - policy.period] : fallback[i];
      }
      break;
    }
  }
  return ts.with_values(std::move(out));
}

enum class SmoothKind { median, mean };

/// Centered moving window; windows shrink symmetrically-clipped at the edges.
inline TimeSeries smooth(const TimeSeries& ts, std::size_t window, SmoothKind kind) {
  if (window == 0 || window % 2 == 0) throw Error(ErrorKind::InvalidArgument, "window must be odd and >= 1");
  if (window > ts.size()) throw Error(ErrorKind::WindowTooLarge, "window exceeds series length");
  if (!ts.complete()) throw Error(ErrorKind::InvalidArgument, "smooth requires an imputed series");
  if (window == 1) return ts;
  const std::size_t half = window / 2;
  const auto v = ts.values();
  const std::size_t n = v.size();
  std::vector<double> out(n);
  std::vector<double> buf;
  buf.reserve(window);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    if (kind == SmoothKind::mean) {
      double s = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) s += v[j];
      out[i] = s / static_cast<double>(hi - lo + 1);
    } else {
      buf.assign(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi + 1));
      out[i] = autoad::detail::median(buf);
    }
  }
  return ts.with_values(std::move(out));
}

enum class AggregateKind { mean, sum };

inline std::string_view to_string(AggregateKind a) { return a == AggregateKind::mean ? "mean" : "sum"; }

/// Buckets start at the series origin; a trailing partial bucket is dropped.
/// Missing entries inside a bucket are skipped; an all-missing bucket stays missing.
inline TimeSeries aggregate(const TimeSeries& ts, Frequency target, AggregateKind agg = AggregateKind::mean) {
  const auto target_step = step_of(target);
  if (!target_step || *target_step < ts.step() || *target_step % ts.step() != 0)
    throw Error(ErrorKind::IncompatibleFrequency, "target step must be an integer multiple of the source step");
  const auto ratio = static_cast<std::size_t>(*target_step / ts.step());
  if (ratio == 1) return TimeSeries(ts.start_epoch(), ts.step(), {ts.values().begin(), ts.values().end()}, target);
  const std::size_t buckets = ts.size() / ratio;
  if (buckets == 0) throw Error(ErrorKind::IncompatibleFrequency, "series shorter than one target bucket");
  std::vector<double> out(buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t j = b * ratio; j < (b + 1) * ratio; ++j) {
      if (is_missing(ts[j])) continue;
      s += ts[j];
      ++count;
    }
    out[b] = count == 0 ? kMissing : (agg == AggregateKind::mean ? s / static_cast<double>(count) : s);
  }
  return TimeSeries(ts.start_epoch(), *target_step, std::move(out), target);
}

/// Result of the log transform: values = ln(x + offset).
struct LogTransformed {
  TimeSeries series;
  double offset = 0.0;
};

/// The offset shifts non-positive values up and then guarantees every argument is >= 1.
inline double log_offset_for(std::span<const double> values) {
  double lo = std::numeric_limits<double>::infinity();
  for (double v : values)
    if (!is_missing(v)) lo = std::min(lo, v);
  if (!std::isfinite(lo)) return 0.0;
  const double shift = -std::min(0.0, lo);
  const double lift = std::max(0.0, 1.0 - (lo + shift));
  return shift + lift;
}

inline double log_forward(double v, double offset) {
  if (is_missing(v)) return v;
  // Values below the training range can fall under the offset at scoring time.
  return std::log(std::max(v + offset, std::numeric_limits<double>::min()));
}

inline double log_inverse(double y, double offset) { return is_missing(y) ? y : std::exp(y) - offset; }

inline LogTransformed log_transform(const TimeSeries& ts) {
  const double offset = log_offset_for(ts.values());
  std::vector<double> out(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) out[i] = log_forward(ts[i], offset);
  return {ts.with_values(std::move(out)), offset};
}

inline TimeSeries inverse_log_transform(const TimeSeries& ts, double offset) {
  std::vector<double> out(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) out[i] = log_inverse(ts[i], offset);
  return ts.with_values(std::move(out));
}

/// First difference applied `order` times.
inline std::vector<double> difference(std::span<const double> x, int order = 1) {
  std::vector<double> cur(x.begin(), x.end());
  for (int k = 0; k < order && !cur.empty(); ++k) {
    std::vector<double> next(cur.size() > 0 ? cur.size() - 1 : 0);
    for (std::size_t i = 1; i < cur.size(); ++i) next[i - 1] = cur[i] - cur[i - 1];
    cur = std::move(next);
  }
  return cur;
}

}  // namespace autoad
