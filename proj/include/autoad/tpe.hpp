#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "autoad/config.hpp"
#include "autoad/cost.hpp"
#include "autoad/detail/rng.hpp"
#include "autoad/detail/stats.hpp"
#include "autoad/error.hpp"
#include "autoad/injection.hpp"
#include "autoad/profiling.hpp"
#include "autoad/series.hpp"

namespace autoad {

struct Trial {
  ModelConfig config;
  double cost = std::numeric_limits<double>::infinity();
};

struct TuneResult {
  ModelConfig best_config;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<Trial> trials;
  std::uint64_t seed = 0;
};

struct TuneOptions {
  double injection_rate = 0.05;
  std::vector<double> scales{3.0, 5.0, 8.0};
  std::size_t smoothing_window = 1;
  SmoothKind smoothing = SmoothKind::median;
  double gamma = 0.25;
  std::size_t n_ei = 24;
  /// Random startup trials; max(10, budget / 4) when unset.
  std::optional<std::size_t> n_startup;
  std::size_t l_max = 3;
  double min_missing = 0.0, max_missing = 0.5;
  double min_threshold = 0.95, max_threshold = 0.999;
  CostOptions cost{};
  /// Hard cap on CSS iterations passed into every structural candidate.
  int max_iterations = 4000;
};

namespace detail {

/// The searched space. Truncation candidates are "none" plus detected change points.
struct SearchSpace {
  std::vector<std::optional<std::size_t>> truncations;
  std::size_t l_max = 3;
  double missing_lo = 0.0, missing_hi = 0.5;
  double threshold_lo = 0.95, threshold_hi = 0.999;
  double forgetting_lo = 0.9, forgetting_hi = 0.9999;
  int max_iterations = 4000;
};

inline std::size_t truncation_slot(const SearchSpace& sp, const ModelConfig& c) {
  for (std::size_t i = 0; i < sp.truncations.size(); ++i)
    if (sp.truncations[i] == c.truncate_at) return i;
  return 0;
}

inline ModelConfig sample_prior(const SearchSpace& sp, Rng& rng) {
  ModelConfig c;
  c.truncate_at = sp.truncations[static_cast<std::size_t>(rng.index(sp.truncations.size()))];
  c.max_missing_fraction = rng.uniform(sp.missing_lo, sp.missing_hi);
  c.log_scale = rng.coin();
  c.method = rng.coin() ? Method::filtering : Method::structural;
  c.decision_threshold = rng.uniform(sp.threshold_lo, sp.threshold_hi);
  if (c.method == Method::structural) {
    c.structural.p = static_cast<int>(rng.index(4));
    c.structural.q = static_cast<int>(rng.index(4));
    c.structural.l = static_cast<int>(rng.index(sp.l_max + 1));
    c.structural.max_iterations = sp.max_iterations;
  } else {
    c.filtering.state_dim = 1 + static_cast<int>(rng.index(2));
    c.filtering.forgetting = rng.uniform(sp.forgetting_lo, sp.forgetting_hi);
  }
  return c;
}

/// Parzen estimator over one bounded continuous dimension: Gaussian kernels at
/// the observations plus a uniform prior component, truncated to [lo, hi].
class ContinuousParzen {
 public:
  ContinuousParzen(std::vector<double> obs, double lo, double hi) : obs_(std::move(obs)), lo_(lo), hi_(hi) {
    const double n = static_cast<double>(obs_.size());
    bw_ = (hi_ - lo_) * std::max(0.05, 0.5 * std::pow(n + 1.0, -0.2));
  }

  double sample(Rng& rng) const {
    const std::size_t k = static_cast<std::size_t>(rng.index(obs_.size() + 1));
    if (k == obs_.size()) return rng.uniform(lo_, hi_);
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double x = rng.normal(obs_[k], bw_);
      if (x >= lo_ && x <= hi_) return x;
    }
    return std::clamp(obs_[k], lo_, hi_);
  }

  double log_density(double x) const {
    const double w = 1.0 / static_cast<double>(obs_.size() + 1);
    double dens = w / (hi_ - lo_);
    for (double m : obs_) {
      const double mass = normal_cdf((hi_ - m) / bw_) - normal_cdf((lo_ - m) / bw_);
      const double u = (x - m) / bw_;
      dens += w * std::exp(-0.5 * u * u) / (bw_ * std::sqrt(2.0 * std::numbers::pi) * std::max(mass, 1e-12));
    }
    return std::log(dens);
  }

 private:
  std::vector<double> obs_;
  double lo_, hi_, bw_ = 1.0;
};

/// Categorical estimator with add-one smoothing.
class CategoricalParzen {
 public:
  CategoricalParzen(const std::vector<std::size_t>& obs, std::size_t k) : weights_(k, 1.0), total_(static_cast<double>(k)) {
    for (std::size_t v : obs) {
      weights_[v] += 1.0;
      total_ += 1.0;
    }
  }

  std::size_t sample(Rng& rng) const {
    double u = rng.uniform() * total_;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (u < weights_[i]) return i;
      u -= weights_[i];
    }
    return weights_.size() - 1;
  }

  double log_density(std::size_t v) const { return std::log(weights_[v] / total_); }

 private:
  std::vector<double> weights_;
  double total_;
};

/// Densities for every dimension built from one group of trials; conditional
/// dimensions only see trials in which they are active.
struct GroupDensity {
  CategoricalParzen truncation, log_scale, method, p, q, l, state_dim;
  ContinuousParzen missing, threshold, forgetting;

  GroupDensity(const SearchSpace& sp, const std::vector<const ModelConfig*>& group)
      : truncation(collect(group, [&](const ModelConfig& c) { return truncation_slot(sp, c); }), sp.truncations.size()),
        log_scale(collect(group, [](const ModelConfig& c) { return std::size_t{c.log_scale}; }), 2),
        method(collect(group, [](const ModelConfig& c) { return std::size_t{c.method == Method::filtering}; }), 2),
        p(collect_if(group, Method::structural, [](const ModelConfig& c) { return std::size_t(c.structural.p); }), 4),
        q(collect_if(group, Method::structural, [](const ModelConfig& c) { return std::size_t(c.structural.q); }), 4),
        l(collect_if(group, Method::structural, [](const ModelConfig& c) { return std::size_t(c.structural.l); }),
          sp.l_max + 1),
        state_dim(collect_if(group, Method::filtering,
                             [](const ModelConfig& c) { return std::size_t(c.filtering.state_dim - 1); }),
                  2),
        missing(collect_real(group, [](const ModelConfig& c) { return c.max_missing_fraction; }), sp.missing_lo,
                sp.missing_hi),
        threshold(collect_real(group, [](const ModelConfig& c) { return c.decision_threshold; }), sp.threshold_lo,
                  sp.threshold_hi),
        forgetting(collect_real_if(group, Method::filtering, [](const ModelConfig& c) { return c.filtering.forgetting; }),
                   sp.forgetting_lo, sp.forgetting_hi) {}

  ModelConfig sample(const SearchSpace& sp, Rng& rng) const {
    ModelConfig c;
    c.truncate_at = sp.truncations[truncation.sample(rng)];
    c.max_missing_fraction = missing.sample(rng);
    c.log_scale = log_scale.sample(rng) == 1;
    c.method = method.sample(rng) == 1 ? Method::filtering : Method::structural;
    c.decision_threshold = threshold.sample(rng);
    if (c.method == Method::structural) {
      c.structural.p = static_cast<int>(p.sample(rng));
      c.structural.q = static_cast<int>(q.sample(rng));
      c.structural.l = static_cast<int>(l.sample(rng));
      c.structural.max_iterations = sp.max_iterations;
    } else {
      c.filtering.state_dim = 1 + static_cast<int>(state_dim.sample(rng));
      c.filtering.forgetting = forgetting.sample(rng);
    }
    return c;
  }

  double log_density(const SearchSpace& sp, const ModelConfig& c) const {
    double s = truncation.log_density(truncation_slot(sp, c)) + missing.log_density(c.max_missing_fraction) +
               log_scale.log_density(c.log_scale ? 1 : 0) +
               method.log_density(c.method == Method::filtering ? 1 : 0) + threshold.log_density(c.decision_threshold);
    if (c.method == Method::structural) {
      s += p.log_density(static_cast<std::size_t>(c.structural.p)) +
           q.log_density(static_cast<std::size_t>(c.structural.q)) +
           l.log_density(static_cast<std::size_t>(c.structural.l));
    } else {
      s += state_dim.log_density(static_cast<std::size_t>(c.filtering.state_dim - 1)) +
           forgetting.log_density(c.filtering.forgetting);
    }
    return s;
  }

 private:
  template <typename F>
  static std::vector<std::size_t> collect(const std::vector<const ModelConfig*>& g, F f) {
    std::vector<std::size_t> out;
    for (const auto* c : g) out.push_back(f(*c));
    return out;
  }
  template <typename F>
  static std::vector<std::size_t> collect_if(const std::vector<const ModelConfig*>& g, Method m, F f) {
    std::vector<std::size_t> out;
    for (const auto* c : g)
      if (c->method == m) out.push_back(f(*c));
    return out;
  }
  template <typename F>
  static std::vector<double> collect_real(const std::vector<const ModelConfig*>& g, F f) {
    std::vector<double> out;
    for (const auto* c : g) out.push_back(f(*c));
    return out;
  }
  template <typename F>
  static std::vector<double> collect_real_if(const std::vector<const ModelConfig*>& g, Method m, F f) {
    std::vector<double> out;
    for (const auto* c : g)
      if (c->method == m) out.push_back(f(*c));
    return out;
  }
};

/// Shared preparation for tune and random_search.
struct SearchProblem {
  LabeledSeries labeled;
  SearchSpace space;
};

inline SearchProblem build_problem(const TimeSeries& ts, std::uint64_t seed, const TuneOptions& opt) {
  const TimeSeries imputed = impute(ts, opt.cost.profile.impute);
  const TimeSeries smoothed =
      opt.smoothing_window > 1 ? smooth(imputed, opt.smoothing_window, opt.smoothing) : imputed;
  SearchProblem pb{inject_synthetic_anomalies(smoothed, opt.injection_rate, opt.scales, seed), {}};
  pb.space.truncations.push_back(std::nullopt);
  for (std::size_t cp : profile(smoothed, opt.cost.profile).change_points) pb.space.truncations.push_back(cp);
  pb.space.l_max = opt.l_max;
  pb.space.missing_lo = opt.min_missing;
  pb.space.missing_hi = opt.max_missing;
  pb.space.threshold_lo = opt.min_threshold;
  pb.space.threshold_hi = opt.max_threshold;
  pb.space.max_iterations = opt.max_iterations;
  return pb;
}

inline std::uint64_t search_stream_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

inline void record(TuneResult& res, ModelConfig c, double value) {
  res.trials.push_back({c, value});
  if (value < res.best_cost || res.trials.size() == 1) {
    res.best_cost = value;
    res.best_config = std::move(c);
  }
}

}  // namespace detail

inline std::size_t default_startup(std::size_t budget) { return std::max<std::size_t>(10, budget / 4); }

/// Pure random search over the same space and the same random stream as tune.
inline TuneResult random_search(const TimeSeries& ts, std::size_t budget, double alpha, std::uint64_t seed,
                                const TuneOptions& opt = {}) {
  if (budget < 1) throw Error(ErrorKind::InvalidArgument, "budget must be positive");
  auto pb = detail::build_problem(ts, seed, opt);
  ProfileCache cache;
  detail::Rng rng(detail::search_stream_seed(seed));
  TuneResult res;
  res.seed = seed;
  for (std::size_t i = 0; i < budget; ++i) {
    ModelConfig c = detail::sample_prior(pb.space, rng);
    const double v = cost(c, pb.labeled, alpha, opt.cost, &cache);
    detail::record(res, std::move(c), v);
  }
  return res;
}

/// Tree-structured Parzen estimator search. Invalid configurations cost +inf
/// and always land in the "bad" group.
inline TuneResult tune(const TimeSeries& ts, std::size_t budget, double alpha, std::uint64_t seed,
                       const TuneOptions& opt = {}) {
  if (budget < 10) throw Error(ErrorKind::InvalidArgument, "budget must be at least 10");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0,1]");
  auto pb = detail::build_problem(ts, seed, opt);
  ProfileCache cache;
  detail::Rng rng(detail::search_stream_seed(seed));
  const std::size_t startup = std::min(budget, opt.n_startup.value_or(default_startup(budget)));
  TuneResult res;
  res.seed = seed;
  for (std::size_t i = 0; i < budget; ++i) {
    ModelConfig c;
    if (i < startup) {
      c = detail::sample_prior(pb.space, rng);
    } else {
      std::vector<std::size_t> order(res.trials.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return res.trials[a].cost < res.trials[b].cost; });
      std::size_t finite = 0;
      for (const auto& t : res.trials) finite += std::isfinite(t.cost) ? 1 : 0;
      const auto n_good = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::ceil(opt.gamma * static_cast<double>(order.size()))), 1,
          std::max<std::size_t>(1, finite));
      std::vector<const ModelConfig*> good, bad;
      for (std::size_t k = 0; k < order.size(); ++k)
        (k < n_good ? good : bad).push_back(&res.trials[order[k]].config);
      const detail::GroupDensity lgood(pb.space, good), lbad(pb.space, bad);
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < opt.n_ei; ++k) {
        ModelConfig cand = lgood.sample(pb.space, rng);
        const double score = lgood.log_density(pb.space, cand) - lbad.log_density(pb.space, cand);
        if (score > best_score) {
          best_score = score;
          c = std::move(cand);
        }
      }
    }
    const double v = cost(c, pb.labeled, alpha, opt.cost, &cache);
    detail::record(res, std::move(c), v);
  }
  return res;
}

}  // namespace autoad
