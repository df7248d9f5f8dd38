#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "autoad/config.hpp"
#include "autoad/error.hpp"
#include "autoad/filtering.hpp"
#include "autoad/profiling.hpp"
#include "autoad/series.hpp"
#include "autoad/structural.hpp"
#include "autoad/tail.hpp"

namespace autoad {

/// A fitted model of either family plus what is needed to score with it.
struct TrainedModel {
  ModelConfig config;
  DataProfile profile;
  std::optional<StructuralModel> structural;
  std::optional<StateSpaceModel> filtering;
  FilterState filter_end_state;  ///< filter state after the training data
  std::size_t first_index = 0;   ///< grid index of the first training point
  std::size_t n_train = 0;

  Method method() const { return structural ? Method::structural : Method::filtering; }
};

/// Longest run of flagged observations that is absorbed as predictions;
/// further observations are accepted so the state can re-synchronize.
inline constexpr std::size_t kMaxAbsorbedRun = 5;

/// Per-series scoring state; only the member matching the model is used.
struct ScoringState {
  StructuralState structural;
  FilterState filter;
  std::size_t absorbed_run = 0;
};

struct StepScore {
  double probability = 0.0;
  double expected = 0.0;  ///< one-step prediction, original scale
  double z = 0.0;         ///< signed standardized deviation
  bool anomalous = false;
};

/// Slices off data before `truncate_at`, checks the missing budget, imputes.
inline TimeSeries prepare_training_series(const TimeSeries& raw, const ModelConfig& config,
                                          const ImputePolicy& policy = {}) {
  TimeSeries ts = raw;
  if (config.truncate_at && *config.truncate_at > 0) {
    if (*config.truncate_at >= raw.size()) throw Error(ErrorKind::InsufficientData, "truncation leaves no data");
    ts = raw.slice(*config.truncate_at, raw.size() - *config.truncate_at);
  }
  if (ts.missing_fraction() > config.max_missing_fraction)
    throw Error(ErrorKind::TooManyMissing, "missing fraction exceeds the configured tolerance");
  ImputePolicy p = policy;
  p.max_gap_fraction = std::max(p.max_gap_fraction, config.max_missing_fraction);
  return impute(ts, p);
}

/// Fits the configured family on an already prepared series.
inline TrainedModel fit_model(const TimeSeries& prepared, const DataProfile& profile, const ModelConfig& config) {
  config.validate();
  TrainedModel out;
  out.config = config;
  out.profile = profile;
  out.n_train = prepared.size();
  if (config.method == Method::structural) {
    out.structural = fit_structural(prepared, profile, config);
  } else {
    auto [model, state] = fit_filtering(prepared, config);
    out.filtering = std::move(model);
    out.filter_end_state = std::move(state);
  }
  return out;
}

/// prepare -> profile -> fit.
inline TrainedModel train_model(const TimeSeries& raw, const ModelConfig& config, const ProfileOptions& options = {}) {
  const TimeSeries prepared = prepare_training_series(raw, config, options.impute);
  const DataProfile prof = profile(prepared, options);
  TrainedModel m = fit_model(prepared, prof, config);
  m.first_index = config.truncate_at.value_or(0);
  return m;
}

/// State positioned right after the training data.
inline ScoringState end_of_training_state(const TrainedModel& m) {
  ScoringState s;
  if (m.structural) s.structural = m.structural->end_state;
  else s.filter = m.filter_end_state;
  return s;
}

/// State positioned before the first training point. The filter keeps the
/// residual statistics learned in training so early replay steps are scored
/// against a settled distribution.
inline ScoringState fresh_scoring_state(const TrainedModel& m) {
  ScoringState s;
  if (m.filtering) {
    s.filter = initial_filter_state(*m.filtering);
    s.filter.eta_mean = m.filter_end_state.eta_mean;
    s.filter.eta_var = m.filter_end_state.eta_var;
    s.filter.weight = m.filter_end_state.weight;
    s.filter.m2 = m.filter_end_state.m2;
  }
  return s;
}

/// One-step forecast of the next observation on the original scale.
inline ForecastPoint predict_observation(const TrainedModel& m, const ScoringState& s) {
  if (m.structural) {
    const auto f = predict_next(*m.structural, s.structural);
    return {from_model_scale(*m.structural, f.mean), f.std};
  }
  const auto& fm = *m.filtering;
  const auto f = forecast_filtering(fm, s.filter, 1).front();
  return {from_filter_units(fm, f.mean), f.std * fm.unit};
}

/// h-step forecasts from the end of the training data, original scale.
inline std::vector<ForecastPoint> forecast_trained(const TrainedModel& m, std::size_t h) {
  if (m.structural) return forecast(*m.structural, h);
  const auto& fm = *m.filtering;
  auto f = forecast_filtering(fm, m.filter_end_state, h);
  for (auto& p : f) p = {from_filter_units(fm, p.mean), p.std * fm.unit};
  return f;
}

/// Scores observation y and advances the state. Observations at or above the
/// threshold are absorbed as their prediction (at most kMaxAbsorbedRun in a
/// row) so they do not contaminate later forecasts; filter residual
/// statistics are updated regardless. Missing observations are absorbed silently (probability NaN).
inline StepScore score_observation(const TrainedModel& m, ScoringState& s, double y, double threshold) {
  StepScore out;
  if (m.structural) {
    const auto& sm = *m.structural;
    const auto pred = predict_next(sm, s.structural);
    out.expected = from_model_scale(sm, pred.mean);
    if (is_missing(y)) {
      out.probability = kMissing;
      advance(sm, s.structural, pred.mean);
      return out;
    }
    const double z = to_model_scale(sm, y);
    out.z = pred.std > kDegenerateStd ? (z - pred.mean) / pred.std
                                      : (z == pred.mean ? 0.0 : std::copysign(1e300, z - pred.mean));
    out.probability = anomaly_probability_structural(sm, z, pred.mean, pred.std);
    out.anomalous = out.probability >= threshold;
    const bool absorb = out.anomalous && s.absorbed_run < kMaxAbsorbedRun;
    s.absorbed_run = absorb ? s.absorbed_run + 1 : 0;
    advance(sm, s.structural, absorb ? pred.mean : z);
    return out;
  }
  const auto& fm = *m.filtering;
  const FilterState before = s.filter;
  const double prior_level = (fm.A * (fm.C * before.x_post))(0, 0);
  out.expected = from_filter_units(fm, prior_level);
  if (is_missing(y)) {
    out.probability = kMissing;
    s.filter = kalman_predict_only(fm, before);
    return out;
  }
  const double v = to_filter_units(fm, y);
  FilterState next = kalman_step(fm, before, v);
  const double sd = std::sqrt(std::max(before.eta_var, fm.eta_var_floor));
  out.z = (next.eta - before.eta_mean) / sd;
  out.probability = anomaly_probability_from_z(out.z);
  out.anomalous = out.probability >= threshold;
  const bool absorb = out.anomalous && s.absorbed_run < kMaxAbsorbedRun;
  s.absorbed_run = absorb ? s.absorbed_run + 1 : 0;
  if (absorb) {
    // The state skips the observation; the residual statistics still see it.
    FilterState held = kalman_predict_only(fm, before);
    held.eta_mean = next.eta_mean;
    held.eta_var = next.eta_var;
    held.weight = next.weight;
    held.m2 = next.m2;
    s.filter = std::move(held);
  } else {
    s.filter = std::move(next);
  }
  return out;
}

}  // namespace autoad
