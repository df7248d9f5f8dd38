#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "autoad/bench/metrics.hpp"
#include "autoad/bench/nab.hpp"
#include "autoad/orchestrator/orchestrator.hpp"

namespace autoad {

/// Replay cadences per aggregation level.
/// hourly: train every 48, ttl 96, first training after one week;
/// daily: train every 14, ttl 28, first training after 30 days.
inline JobSpec replay_spec(Frequency freq, std::uint64_t seed = 0) {
  JobSpec s;
  s.job_id = "bench";
  s.metric_id = "bench";
  s.seed = seed;
  s.channels.clear();
  s.tune_initial = true;
  if (freq == Frequency::daily) {
    s.train_every = 14;
    s.model_ttl = 28;
    s.initial_train = 30;
  } else {
    s.train_every = 48;
    s.model_ttl = 96;
    s.initial_train = 168;
  }
  return s;
}

inline std::size_t forecast_horizon(Frequency freq) { return freq == Frequency::daily ? 7 : 24; }

/// Forecast issued by a published model from the end of its training data.
struct ForecastRun {
  std::size_t origin = 0;
  std::vector<double> mean;
};

struct ReplayResult {
  std::vector<double> probabilities;  ///< per grid point; NaN where unscored
  std::size_t first_scored = 0;       ///< initial training window length
  std::size_t retune_count = 0;
  std::vector<std::pair<Tick, Health>> health;
  std::vector<ForecastRun> forecasts;
};

struct ReplayOptions {
  OrchestratorOptions orchestrator{};
  std::size_t horizon = 0;  ///< forecasts of this length at each publication; 0 = none
};

/// Drives an in-memory orchestrator over the whole series on the simulated clock.
inline ReplayResult replay(const LabeledBenchSeries& lbs, JobSpec spec, ReplayOptions options = {}) {
  const TimeSeries& ts = lbs.series;
  spec.source.clear();
  spec.values.assign(ts.values().begin(), ts.values().end());
  spec.start = ts.start_epoch();
  spec.step = ts.step();
  if (ts.size() <= spec.first_training_tick())
    throw Error(ErrorKind::SeriesTooShort, lbs.name + " is not longer than its first training window");

  ReplayResult out;
  out.first_scored = spec.first_training_tick();
  out.probabilities.assign(ts.size(), std::numeric_limits<double>::quiet_NaN());
  if (options.horizon > 0) {
    const std::size_t h = options.horizon;
    options.orchestrator.on_publish = [&out, h](const ModelRecord&, const TrainedModel& m, std::size_t end) {
      ForecastRun run{end, {}};
      try {
        for (const auto& f : forecast_trained(m, h)) run.mean.push_back(f.mean);
      } catch (const Error&) {
        return;
      }
      out.forecasts.push_back(std::move(run));
    };
  }
  options.orchestrator.keep_results = true;
  options.orchestrator.alert_stream = nullptr;
  Orchestrator orch(options.orchestrator);
  orch.register_job(spec);
  orch.advance_clock(ts.size());
  for (const auto& r : orch.results())
    out.probabilities[static_cast<std::size_t>((r.timestamp - ts.start_epoch()) / ts.step())] = r.probability;
  out.retune_count = orch.retune_count(spec.metric_id);
  out.health = orch.health_history(spec.metric_id);
  return out;
}

/// Scored, labeled pairs after the initial window.
struct ScoredLabels {
  std::vector<double> probabilities;
  std::vector<int> labels;
};

inline ScoredLabels scored_labels(const LabeledBenchSeries& lbs, const ReplayResult& r) {
  ScoredLabels out;
  for (std::size_t i = r.first_scored; i < r.probabilities.size(); ++i) {
    if (std::isnan(r.probabilities[i])) continue;
    out.probabilities.push_back(r.probabilities[i]);
    out.labels.push_back(lbs.point_labels[i]);
  }
  return out;
}

/// Forecast/actual pairs restricted to observed, unlabeled targets.
struct ForecastPairs {
  std::vector<double> pred;
  std::vector<double> actual;
};

inline ForecastPairs forecast_pairs(const LabeledBenchSeries& lbs, const ReplayResult& r) {
  ForecastPairs out;
  for (const auto& run : r.forecasts)
    for (std::size_t j = 0; j < run.mean.size(); ++j) {
      const std::size_t i = run.origin + j;
      if (i >= lbs.series.size()) break;
      const double y = lbs.series[i];
      if (is_missing(y) || lbs.point_labels[i] || !std::isfinite(run.mean[j])) continue;
      out.pred.push_back(run.mean[j]);
      out.actual.push_back(y);
    }
  return out;
}

}  // namespace autoad
