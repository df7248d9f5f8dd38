#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "autoad/detail/rng.hpp"
#include "autoad/detail/stats.hpp"
#include "autoad/error.hpp"
#include "autoad/series.hpp"

namespace autoad {

struct InjectedPoint {
  std::size_t index = 0;
  double scale = 0.0;  ///< signed multiple of the robust std

  bool operator==(const InjectedPoint&) const = default;
};

struct LabeledSeries {
  TimeSeries series;
  std::vector<int> labels;
  std::vector<InjectedPoint> injected;  ///< ascending by index
};

inline constexpr double kMaxInjectionRate = 0.1;
inline constexpr std::size_t kInjectionWarmup = 10;

/// Robust std (1.4826 MAD), floored at 1% of |mean| (or 1 for a zero mean)
/// so that flat series still receive visible perturbations.
inline double injection_unit(std::span<const double> v) {
  const double rs = detail::robust_std(v);
  const double floor = std::abs(detail::mean(v)) > 0.0 ? 0.01 * std::abs(detail::mean(v)) : 1.0;
  return std::max(rs, floor);
}

/// Perturbs ceil(rate * n) points, drawn without replacement after the first
/// `warmup` points, by +-scale * robust_std with scale drawn from `scales`.
inline LabeledSeries inject_synthetic_anomalies(const TimeSeries& ts, double rate, const std::vector<double>& scales,
                                                std::uint64_t seed, std::size_t warmup = kInjectionWarmup) {
  if (!(rate >= 0.0)) throw Error(ErrorKind::InvalidArgument, "injection rate must be non-negative");
  if (rate > kMaxInjectionRate) throw Error(ErrorKind::RateTooHigh, "injection rate above 0.1");
  if (scales.empty()) throw Error(ErrorKind::InvalidArgument, "at least one injection scale is required");
  if (!ts.complete()) throw Error(ErrorKind::InvalidArgument, "injection requires an imputed series");

  const std::size_t n = ts.size();
  // The tolerance keeps products such as 0.02 * 1000 from rounding up to 21.
  const auto count = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n) - 1e-9));
  LabeledSeries out{ts, std::vector<int>(n, 0), {}};
  if (count == 0) return out;
  if (n <= warmup || count > n - warmup)
    throw Error(ErrorKind::SeriesTooShort, "not enough points after warmup for the requested injections");

  detail::Rng rng(seed);
  std::vector<std::size_t> pool(n - warmup);
  std::iota(pool.begin(), pool.end(), warmup);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());

  const double unit = injection_unit(ts.values());
  std::vector<double> values(ts.values().begin(), ts.values().end());
  for (std::size_t idx : pool) {
    const double sign = rng.coin() ? 1.0 : -1.0;
    const double scale = sign * scales[static_cast<std::size_t>(rng.index(scales.size()))];
    values[idx] += scale * unit;
    out.labels[idx] = 1;
    out.injected.push_back({idx, scale});
  }
  out.series = ts.with_values(std::move(values));
  return out;
}

}  // namespace autoad
