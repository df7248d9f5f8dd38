#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autoad/detail/rng.hpp"
#include "autoad/detail/stats.hpp"
#include "autoad/error.hpp"
#include "autoad/tail.hpp"

namespace autoad {

/// High on stable points, low on anomalies.
inline double scoring_function(double anomaly_probability) { return 1.0 - anomaly_probability; }

struct Domain {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};
using Curve = std::vector<CurvePoint>;

/// 0.900, 0.901, ..., 0.999.
inline std::vector<double> alpha_grid() {
  std::vector<double> a;
  for (int k = 900; k <= 999; ++k) a.push_back(k / 1000.0);
  return a;
}

/// `count` log-spaced levels on [T/100, T] with T = (score range) / (domain length).
inline std::vector<double> t_grid(std::span<const double> sample_scores, const Domain& domain, std::size_t count = 50) {
  if (sample_scores.empty()) throw Error(ErrorKind::EmptyScores, "no sample scores");
  const auto [mn, mx] = std::minmax_element(sample_scores.begin(), sample_scores.end());
  const double top = std::max(*mx - *mn, 1e-6) / domain.length();
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    t[i] = top * std::pow(10.0, -2.0 * (1.0 - f));
  }
  return t;
}

/// [min - pad * range, max + pad * range] of the observed values.
inline Domain padded_domain(std::span<const double> values, double pad = 0.1) {
  if (values.empty()) throw Error(ErrorKind::EmptyScores, "no values to span");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double range = std::max(*mx - *mn, 1e-6);
  return {*mn - pad * range, *mx + pad * range};
}

namespace detail {

/// Scores of n uniform draws over the domain, sorted ascending.
template <typename Scorer>
std::vector<double> volume_scores(Scorer&& score, const Domain& domain, std::size_t n_mc, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> s(n_mc);
  for (auto& v : s) v = score(domain.lo + domain.length() * rng.uniform());
  std::sort(s.begin(), s.end());
  return s;
}

/// Fraction of an ascending sequence that is >= u.
inline double upper_fraction(const std::vector<double>& ascending, double u) {
  const auto it = std::lower_bound(ascending.begin(), ascending.end(), u);
  return static_cast<double>(ascending.end() - it) / static_cast<double>(ascending.size());
}

inline void check_curve_inputs(std::span<const double> sample_scores, const Domain& domain, std::size_t n_mc) {
  if (sample_scores.empty()) throw Error(ErrorKind::EmptyScores, "no sample scores");
  if (!(domain.lo < domain.hi)) throw Error(ErrorKind::InvalidArgument, "domain must satisfy lo < hi");
  if (n_mc < 1000) throw Error(ErrorKind::InvalidArgument, "n_mc must be at least 1000");
}

}  // namespace detail

/// Mass-volume curve. For each alpha the level u* is the smallest sample score
/// whose upper set holds at least alpha of the sample; MV is the Monte-Carlo
/// volume of {x : s(x) >= u*}. One uniform draw serves all alphas.
template <typename Scorer>
Curve mv_curve(Scorer&& score, std::span<const double> sample_scores, std::span<const double> alphas,
               const Domain& domain, std::size_t n_mc = 10000, std::uint64_t seed = 0) {
  detail::check_curve_inputs(sample_scores, domain, n_mc);
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha outside (0,1)");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) throw Error(ErrorKind::InvalidArgument, "alphas must ascend");
  }
  std::vector<double> desc(sample_scores.begin(), sample_scores.end());
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const auto vol = detail::volume_scores(score, domain, n_mc, seed);
  const double n = static_cast<double>(desc.size());
  Curve out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    auto k = static_cast<std::size_t>(std::ceil(a * n - 1e-9));
    k = std::clamp<std::size_t>(k, 1, desc.size());
    const double u = desc[k - 1];
    out.push_back({a, domain.length() * detail::upper_fraction(vol, u)});
  }
  return out;
}

/// Excess-mass curve: EM(t) = max_u P(s >= u) - t * Leb(s >= u), u ranging
/// over the sample scores and a level above all of them (value 0).
template <typename Scorer>
Curve em_curve(Scorer&& score, std::span<const double> sample_scores, std::span<const double> ts,
               const Domain& domain, std::size_t n_mc = 10000, std::uint64_t seed = 0) {
  detail::check_curve_inputs(sample_scores, domain, n_mc);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] >= 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be non-negative");
    if (i > 0 && !(ts[i] > ts[i - 1])) throw Error(ErrorKind::InvalidArgument, "t values must ascend");
  }
  std::vector<double> asc(sample_scores.begin(), sample_scores.end());
  std::sort(asc.begin(), asc.end());
  const auto vol = detail::volume_scores(score, domain, n_mc, seed);

  struct Level {
    double mass, volume;
  };
  std::vector<Level> levels;
  for (std::size_t i = 0; i < asc.size(); ++i) {
    if (i > 0 && asc[i] == asc[i - 1]) continue;
    levels.push_back({static_cast<double>(asc.size() - i) / static_cast<double>(asc.size()),
                      domain.length() * detail::upper_fraction(vol, asc[i])});
  }
  Curve out;
  out.reserve(ts.size());
  for (double t : ts) {
    double best = 0.0;
    for (const auto& l : levels) best = std::max(best, l.mass - t * l.volume);
    out.push_back({t, best});
  }
  return out;
}

struct CriteriaSummary {
  double mv_avg = 0.0;
  double em_avg = 0.0;
};

inline CriteriaSummary summarize_criteria(const Curve& mv, const Curve& em) {
  if (mv.empty() || em.empty()) throw Error(ErrorKind::EmptyScores, "empty curve");
  CriteriaSummary s;
  for (const auto& p : mv) s.mv_avg += p.y;
  for (const auto& p : em) s.em_avg += p.y;
  s.mv_avg /= static_cast<double>(mv.size());
  s.em_avg /= static_cast<double>(em.size());
  return s;
}

// ---- health --------------------------------------------------------------

enum class Health { G, Y, R };

constexpr std::string_view to_string(Health h) {
  switch (h) {
    case Health::G: return "G";
    case Health::Y: return "Y";
    case Health::R: return "R";
  }
  return "?";
}

inline Health health_from_string(std::string_view s) {
  if (s == "G") return Health::G;
  if (s == "Y") return Health::Y;
  if (s == "R") return Health::R;
  throw Error(ErrorKind::InvalidArgument, "unknown health label '" + std::string(s) + "'");
}

struct HealthInputs {
  double mv_avg = 0.0;
  double em_avg = 1.0;
  double anomaly_rate = 0.0;
  std::size_t consecutive_anomalies = 0;
  double coefficient_of_variation = 0.0;
  double model_age_fraction = 0.0;
  bool training_failed = false;
};

/// Hard (red) limits. The warning band sits at warn_fraction of each limit,
/// on the healthy side. MV/EM limits default to disabled until a fleet is known.
struct HealthThresholds {
  double mv_red = std::numeric_limits<double>::infinity();
  double em_red = -std::numeric_limits<double>::infinity();
  double rate_red = 0.2;
  std::size_t consecutive_red = 5;
  double warn_fraction = 0.8;
  double age_warn = 0.8;
};

/// mv_red = mv_factor * median(mv_avg), em_red = em_factor * median(em_avg).
inline HealthThresholds fleet_thresholds(std::span<const double> mv_avgs, std::span<const double> em_avgs,
                                         HealthThresholds base = {}, double mv_factor = 2.0,
                                         double em_factor = 0.5) {
  if (!mv_avgs.empty()) base.mv_red = mv_factor * detail::median({mv_avgs.begin(), mv_avgs.end()});
  if (!em_avgs.empty()) base.em_red = em_factor * detail::median({em_avgs.begin(), em_avgs.end()});
  return base;
}

inline Health classify_health(const HealthInputs& in, const HealthThresholds& th) {
  const double w = th.warn_fraction;
  const bool red = in.training_failed || in.model_age_fraction >= 1.0 || in.mv_avg > th.mv_red ||
                   in.em_avg < th.em_red || in.anomaly_rate > th.rate_red ||
                   in.consecutive_anomalies >= th.consecutive_red;
  if (red) return Health::R;
  const double em_warn = th.em_red >= 0.0 ? th.em_red / w : th.em_red * w;
  const bool yellow = in.model_age_fraction >= th.age_warn || in.mv_avg > w * th.mv_red || in.em_avg < em_warn ||
                      in.anomaly_rate > w * th.rate_red ||
                      static_cast<double>(in.consecutive_anomalies) >= w * static_cast<double>(th.consecutive_red);
  return yellow ? Health::Y : Health::G;
}

// ---- score log -------------------------------------------------------------

struct ScoreEntry {
  std::int64_t timestamp = 0;
  double probability = 0.0;
  double observed = 0.0;
  double expected = 0.0;
};

/// Bounded, time-ordered history of one series' scores.
class ScoreLog {
 public:
  explicit ScoreLog(std::string series_id = {}, std::size_t window = 500)
      : series_id_(std::move(series_id)), window_(std::max<std::size_t>(window, 1)) {}

  void append(const ScoreEntry& e) {
    if (!(e.probability >= 0.0 && e.probability <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "probability outside [0,1]");
    if (!entries_.empty() && e.timestamp <= entries_.back().timestamp)
      throw Error(ErrorKind::InvalidArgument, "score log entries must be time-ordered");
    entries_.push_back(e);
    while (entries_.size() > window_) entries_.pop_front();
  }

  void clear() { entries_.clear(); }

  const std::string& series_id() const { return series_id_; }
  std::size_t window() const { return window_; }
  const std::deque<ScoreEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::string series_id_;
  std::size_t window_;
  std::deque<ScoreEntry> entries_;
};

struct HealthSnapshot {
  std::string metric_id;
  std::int64_t timestamp = 0;
  double mv_avg = 0.0;
  double em_avg = 1.0;
  double anomaly_rate = 0.0;
  std::size_t consecutive_anomalies = 0;
  double coefficient_of_variation = 0.0;
  double model_age_fraction = 0.0;
  bool training_failed = false;
  std::size_t sample_size = 0;  ///< scores entering MV/EM
  bool sufficient = false;      ///< false when the log was too short to judge
  Health health = Health::Y;

  HealthInputs inputs() const {
    return {mv_avg, em_avg, anomaly_rate, consecutive_anomalies, coefficient_of_variation, model_age_fraction,
            training_failed};
  }
};

struct EvaluationOptions {
  double alert_threshold = 0.99;
  std::size_t rate_window = 48;
  std::size_t min_entries = 10;
  std::size_t n_mc = 10000;
  std::uint64_t seed = 0;
  double domain_pad = 0.1;
  HealthThresholds thresholds{};
};

/// Scorer on the standardized-deviation domain shared by every model.
inline double standardized_score(double z) { return scoring_function(anomaly_probability_from_z(z)); }

/// Signed standardized deviations of the stable part of a log: entries within
/// `margin` steps of an anomaly run of length >= margin are dropped.
inline std::vector<double> stable_deviations(const std::deque<ScoreEntry>& entries, double threshold,
                                             std::size_t margin) {
  const std::size_t n = entries.size();
  std::vector<char> keep(n, 1);
  for (std::size_t i = 0; i < n;) {
    if (entries[i].probability < threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && entries[j].probability >= threshold) ++j;
    if (j - i >= margin) {
      const std::size_t a = i >= margin ? i - margin : 0;
      const std::size_t b = std::min(n, j + margin);
      std::fill(keep.begin() + static_cast<std::ptrdiff_t>(a), keep.begin() + static_cast<std::ptrdiff_t>(b), 0);
    }
    i = j;
  }
  std::vector<double> z;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    // probabilities of exactly 1 map to the largest representable deviation
    const double p = std::min(entries[i].probability, 1.0 - 1e-16);
    const double mag = std::min(z_from_anomaly_probability(p), 40.0);
    z.push_back(entries[i].observed >= entries[i].expected ? mag : -mag);
  }
  return z;
}

struct LogCurves {
  Curve mv;
  Curve em;
};

/// MV and EM curves of a score log's stable deviations; nullopt below min_entries.
inline std::optional<LogCurves> log_curves(const ScoreLog& log, const EvaluationOptions& opt) {
  const auto z = stable_deviations(log.entries(), opt.alert_threshold, opt.thresholds.consecutive_red);
  if (z.size() < opt.min_entries) return std::nullopt;
  std::vector<double> scores(z.size());
  std::transform(z.begin(), z.end(), scores.begin(), standardized_score);
  const Domain dom = padded_domain(z, opt.domain_pad);
  return LogCurves{mv_curve(standardized_score, scores, alpha_grid(), dom, opt.n_mc, opt.seed),
                   em_curve(standardized_score, scores, t_grid(scores, dom), dom, opt.n_mc, opt.seed)};
}

/// Indicators of one series from its log; MV/EM and the health label are
/// filled by `evaluate_fleet`, which needs every series for its thresholds.
inline HealthSnapshot snapshot_indicators(const std::string& metric_id, std::int64_t now, const ScoreLog& log,
                                          double model_age_fraction, bool training_failed,
                                          const EvaluationOptions& opt) {
  HealthSnapshot s;
  s.metric_id = metric_id;
  s.timestamp = now;
  s.model_age_fraction = std::clamp(model_age_fraction, 0.0, 1.0);
  s.training_failed = training_failed;
  const auto& e = log.entries();
  s.sufficient = e.size() >= opt.min_entries;
  if (e.empty()) return s;

  const std::size_t w = std::min(opt.rate_window, e.size());
  std::size_t flagged = 0;
  std::vector<double> observed;
  for (std::size_t i = e.size() - w; i < e.size(); ++i) {
    flagged += e[i].probability >= opt.alert_threshold;
    observed.push_back(e[i].observed);
  }
  // Short logs are judged against min_entries slots so one early flag is not a 50% rate.
  s.anomaly_rate = static_cast<double>(flagged) / static_cast<double>(std::max(w, opt.min_entries));
  for (auto it = e.rbegin(); it != e.rend() && it->probability >= opt.alert_threshold; ++it) ++s.consecutive_anomalies;
  const double mu = detail::mean(observed);
  s.coefficient_of_variation = mu != 0.0 ? std::sqrt(detail::variance(observed)) / std::abs(mu) : 0.0;

  s.sample_size = stable_deviations(e, opt.alert_threshold, opt.thresholds.consecutive_red).size();
  if (const auto curves = log_curves(log, opt)) {
    const auto c = summarize_criteria(curves->mv, curves->em);
    s.mv_avg = c.mv_avg;
    s.em_avg = c.em_avg;
  }
  return s;
}

/// Derives fleet thresholds from the series with enough MV/EM evidence and
/// labels every snapshot. Short logs are Y unless a hard trigger fires.
inline HealthThresholds evaluate_fleet(std::vector<HealthSnapshot>& fleet, const EvaluationOptions& opt) {
  std::vector<double> mv, em;
  for (const auto& s : fleet) {
    if (s.sample_size < opt.min_entries) continue;
    mv.push_back(s.mv_avg);
    em.push_back(s.em_avg);
  }
  const HealthThresholds th = fleet_thresholds(mv, em, opt.thresholds);
  for (auto& s : fleet) {
    HealthThresholds own = th;
    if (s.sample_size < opt.min_entries) {
      own.mv_red = std::numeric_limits<double>::infinity();
      own.em_red = -std::numeric_limits<double>::infinity();
    }
    s.health = classify_health(s.inputs(), own);
    if (!s.sufficient && s.health == Health::G) s.health = Health::Y;
  }
  return th;
}

}  // namespace autoad
