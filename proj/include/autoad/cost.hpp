#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "autoad/config.hpp"
#include "autoad/error.hpp"
#include "autoad/injection.hpp"
#include "autoad/model.hpp"
#include "autoad/profiling.hpp"

namespace autoad {

inline constexpr double kProbabilityClip = 1e-6;

/// Binary cross-entropy with probabilities clipped to [1e-6, 1 - 1e-6].
inline double cross_entropy(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) throw Error(ErrorKind::LengthMismatch, "probabilities and labels differ in length");
  if (probs.empty()) throw Error(ErrorKind::InvalidArgument, "cross-entropy of an empty sample");
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbabilityClip, 1.0 - kProbabilityClip);
    s += labels[i] ? std::log(p) : std::log1p(-p);
  }
  return -s / static_cast<double>(probs.size());
}

/// Mean absolute percentage error as a fraction; |actual| is floored at eps.
inline double mean_absolute_percentage_error(std::span<const double> pred, std::span<const double> actual,
                                             double eps) {
  if (pred.size() != actual.size()) throw Error(ErrorKind::LengthMismatch, "prediction and actual differ in length");
  if (pred.empty()) throw Error(ErrorKind::InvalidArgument, "MAPE of an empty sample");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - actual[i]) / std::max(std::abs(actual[i]), eps);
  return s / static_cast<double>(pred.size());
}

struct CostOptions {
  double holdout_fraction = 0.2;
  std::size_t warmup = kInjectionWarmup;
  ProfileOptions profile{};
};

/// Profiles keyed by truncation index, shared by the trials of one search.
class ProfileCache {
 public:
  const DataProfile& get(std::size_t key, const TimeSeries& ts, const ProfileOptions& options) {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, profile(ts, options)).first;
    return it->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, DataProfile> cache_;
};

/// Per-point outputs of a cost evaluation.
struct CostBreakdown {
  double cost = std::numeric_limits<double>::infinity();
  double ce = std::numeric_limits<double>::infinity();
  double mape = std::numeric_limits<double>::infinity();
};

/// Every configuration is judged on the same points: the contiguous last
/// `holdout_fraction` of the labeled series. The model is fitted on
/// [truncate_at, holdout start); a fresh scoring state replays the fitted
/// range unscored and then scores the holdout, giving
///   structural: alpha * CE + (1 - alpha) * MAPE,   filtering: CE.
/// Labeled points are excluded from MAPE. Any failure yields +inf.
inline CostBreakdown cost_breakdown(const ModelConfig& config, const LabeledSeries& labeled, double alpha,
                                    const CostOptions& options = {}, ProfileCache* cache = nullptr) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0,1]");
  CostBreakdown out;
  try {
    config.validate();
    const std::size_t total = labeled.series.size();
    const auto holdout_start =
        static_cast<std::size_t>(std::floor((1.0 - options.holdout_fraction) * static_cast<double>(total)));
    const std::size_t first = config.truncate_at.value_or(0);
    if (holdout_start >= total || first + options.warmup >= holdout_start)
      throw Error(ErrorKind::InsufficientData, "series too short for the holdout split");
    const TimeSeries prepared = prepare_training_series(labeled.series, config, options.profile.impute);
    const std::size_t fit_len = holdout_start - first;
    const TimeSeries fit_part = prepared.slice(0, fit_len);
    DataProfile local;
    const DataProfile& prof = cache ? cache->get(first, fit_part, options.profile)
                                    : (local = profile(fit_part, options.profile));
    const TrainedModel model = fit_model(fit_part, prof, config);

    ScoringState state = fresh_scoring_state(model);
    std::vector<double> probs, preds, actual;
    std::vector<int> labels;
    const double eps = 1e-6 * std::max(1.0, std::abs(detail::mean(prepared.values())));
    for (std::size_t i = 0; i < prepared.size(); ++i) {
      const double y = prepared[i];
      const StepScore s = score_observation(model, state, y, config.decision_threshold);
      if (!std::isfinite(s.probability)) throw Error(ErrorKind::NumericalBreakdown, "non-finite probability");
      if (i < fit_len) continue;
      const int label = labeled.labels[first + i];
      probs.push_back(s.probability);
      labels.push_back(label);
      if (!label) {
        if (!std::isfinite(s.expected)) throw Error(ErrorKind::NumericalBreakdown, "non-finite prediction");
        preds.push_back(s.expected);
        actual.push_back(y);
      }
    }
    out.ce = cross_entropy(probs, labels);
    out.mape = preds.empty() ? 0.0 : mean_absolute_percentage_error(preds, actual, eps);
    out.cost = config.method == Method::filtering ? out.ce : alpha * out.ce + (1.0 - alpha) * out.mape;
    if (!std::isfinite(out.cost)) out.cost = std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    out = CostBreakdown{};
  }
  return out;
}

inline double cost(const ModelConfig& config, const LabeledSeries& labeled, double alpha,
                   const CostOptions& options = {}, ProfileCache* cache = nullptr) {
  return cost_breakdown(config, labeled, alpha, options, cache).cost;
}

}  // namespace autoad
