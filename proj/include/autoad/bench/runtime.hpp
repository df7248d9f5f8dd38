#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "autoad/detail/rng.hpp"
#include "autoad/model.hpp"
#include "autoad/tpe.hpp"

namespace autoad {

struct RuntimeRow {
  std::size_t length = 0;
  std::size_t triggers = 0;
  double seconds = 0.0;
};

/// Hourly seasonal series with AR(1) noise for timing runs.
inline TimeSeries runtime_series(std::size_t n, std::uint64_t seed) {
  detail::Rng rng(seed);
  std::vector<double> v(n);
  double e = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    e = 0.7 * e + rng.normal();
    v[t] = 20.0 + 3.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0) + e;
  }
  return TimeSeries::from_values(std::move(v));
}

/// CPU model from /proc/cpuinfo, or "unknown".
inline std::string hardware_description() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) != 0) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) break;
    auto s = line.substr(colon + 1);
    s.erase(0, s.find_first_not_of(' '));
    return s;
  }
  return "unknown";
}

/// Wall-clock time of one training with k forced optimization triggers:
/// k tuning runs on the series, then a fit with the last chosen config.
/// Tuning runs are shared across k, so row k costs the first k tunes plus
/// one fit. Runs on the calling thread only.
inline std::vector<RuntimeRow> measure_runtime(const std::vector<std::size_t>& lengths, std::size_t max_triggers,
                                               std::size_t tune_budget = 30, std::uint64_t seed = 0) {
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  std::vector<RuntimeRow> rows;
  for (std::size_t n : lengths) {
    const TimeSeries ts = runtime_series(n, seed + n);
    double tune_total = 0.0;
    ModelConfig config{};
    for (std::size_t k = 0; k <= max_triggers; ++k) {
      if (k > 0) {
        const auto t0 = clock::now();
        const TuneResult r = tune(ts, tune_budget, 0.5, seed + k);
        tune_total += seconds_since(t0);
        if (std::isfinite(r.best_cost)) config = r.best_config;
      }
      const auto t0 = clock::now();
      try {
        (void)train_model(ts, config);
      } catch (const Error&) {
        ModelConfig fallback = config;
        fallback.method = Method::filtering;
        (void)train_model(ts, fallback);
      }
      rows.push_back({n, k, tune_total + seconds_since(t0)});
    }
  }
  return rows;
}

}  // namespace autoad
