#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "autoad/cost.hpp"
#include "autoad/error.hpp"
#include "autoad/evaluation.hpp"
#include "autoad/model.hpp"
#include "autoad/orchestrator/alert.hpp"
#include "autoad/orchestrator/job.hpp"
#include "autoad/orchestrator/store.hpp"
#include "autoad/serialize.hpp"
#include "autoad/tpe.hpp"

namespace autoad {

using Tick = std::int64_t;

struct ModelRecord {
  std::string model_id;
  std::string metric_id;
  Method method = Method::structural;
  ModelConfig config{};
  Tick published_at = 0;
  Tick expires_at = 0;
  std::size_t tune_generation = 0;
  std::size_t window_start = 0;  ///< grid index where the training window began

  bool expired_at(Tick now) const { return now > expires_at; }
};

inline void to_json(json& j, const ModelRecord& r) {
  j = json{{"model_id", r.model_id},       {"metric_id", r.metric_id},
           {"method", to_string(r.method)}, {"config", r.config},
           {"published_at", r.published_at}, {"expires_at", r.expires_at},
           {"tune_generation", r.tune_generation}, {"window_start", r.window_start}};
}

inline void from_json(const json& j, ModelRecord& r) {
  r.model_id = j.at("model_id").get<std::string>();
  r.metric_id = j.at("metric_id").get<std::string>();
  r.method = method_from_string(j.at("method").get<std::string>());
  r.config = j.at("config").get<ModelConfig>();
  r.published_at = j.at("published_at").get<Tick>();
  r.expires_at = j.at("expires_at").get<Tick>();
  r.tune_generation = j.at("tune_generation").get<std::size_t>();
  r.window_start = j.at("window_start").get<std::size_t>();
}

struct ScoreRecord {
  std::string metric_id;
  std::int64_t timestamp = 0;
  double observed = 0.0;
  double expected = 0.0;
  double probability = 0.0;
  bool is_anomaly = false;
  std::string model_id;
};

inline constexpr const char* kScoreCsvHeader = "metric_id,timestamp,observed,expected,probability,is_anomaly,model_id";

inline std::string to_csv_line(const ScoreRecord& r) {
  return r.metric_id + ',' + std::to_string(r.timestamp) + ',' + format_real(r.observed) + ',' +
         format_real(r.expected) + ',' + format_real(r.probability) + ',' + (r.is_anomaly ? "1" : "0") + ',' +
         r.model_id;
}

enum class TrainingStatus { trained, fallback, failed };

constexpr std::string_view to_string(TrainingStatus s) {
  switch (s) {
    case TrainingStatus::trained: return "trained";
    case TrainingStatus::fallback: return "fallback";
    case TrainingStatus::failed: return "failed";
  }
  return "?";
}

struct TrainingOutcome {
  std::string metric_id;
  TrainingStatus status = TrainingStatus::trained;
  bool tuned = false;
  std::string model_id;
  std::size_t tune_generation = 0;
  std::string message;
};

struct TrainingReport {
  Tick now = 0;
  std::vector<TrainingOutcome> outcomes;
};

struct ScoringIssue {
  std::string metric_id;
  ErrorKind kind = ErrorKind::MissingModel;
};

struct OrchestratorOptions {
  EvaluationOptions evaluation{};
  std::size_t evaluate_every = 1;
  TuneOptions tune{};
  std::ostream* alert_stream = nullptr;
  bool keep_results = true;  ///< keep every ScoreRecord in memory
  /// Called after each publication with the model and the grid index where
  /// its training data ended.
  std::function<void(const ModelRecord&, const TrainedModel&, std::size_t)> on_publish;
};

/// Per-metric view for status tables.
struct MetricStatus {
  std::string metric_id;
  std::string job_id;
  Health health = Health::Y;
  std::string model_id;
  std::optional<Method> method;
  std::size_t retune_count = 0;
  std::size_t tune_generation = 0;
  std::size_t scored = 0;
  std::size_t alerts = 0;
};

/// Single-node simulation of the monitoring pipeline on a simulated clock.
/// At a tick, scoring runs before training, which runs before evaluation.
class Orchestrator {
 public:
  explicit Orchestrator(OrchestratorOptions options = {}, std::optional<std::filesystem::path> data_dir = {})
      : options_(std::move(options)) {
    if (data_dir) store_ = std::make_unique<FileStore>(*data_dir);
    sink_ = AlertSink(options_.alert_stream, store_.get());
  }

  /// Reopens a data directory: jobs, runtime state and active models.
  static Orchestrator open(const std::filesystem::path& data_dir, OrchestratorOptions options = {}) {
    Orchestrator o(std::move(options), data_dir);
    for (const auto& name : o.store_->list("jobs", ".json")) {
      const JobSpec spec = o.store_->read_json(std::filesystem::path("jobs") / name).get<JobSpec>();
      o.add_job(spec);
    }
    if (o.store_->exists("state.json")) o.restore(o.store_->read_json("state.json"));
    return o;
  }

  /// Returns the job id. Identical re-registration is a no-op.
  std::string register_job(const JobSpec& spec) {
    spec.validate();
    if (auto it = jobs_.find(spec.job_id); it != jobs_.end()) {
      if (metrics_.at(it->second).spec == spec) return spec.job_id;
      throw Error(ErrorKind::DuplicateId, "job '" + spec.job_id + "' exists with a different spec");
    }
    if (metrics_.count(spec.metric_id))
      throw Error(ErrorKind::DuplicateId, "metric '" + spec.metric_id + "' is already monitored");
    add_job(spec);
    if (store_) {
      store_->write_json(std::filesystem::path("jobs") / (spec.job_id + ".json"), json(spec));
      save();
    }
    return spec.job_id;
  }

  TrainingReport run_training_cycle(Tick now) {
    if (metrics_.empty()) throw Error(ErrorKind::InvalidArgument, "no registered jobs");
    now_ = std::max(now_, now);
    TrainingReport report{now, {}};
    for (auto& [id, m] : metrics_) {
      if (!training_due(m, now)) continue;
      report.outcomes.push_back(train_metric(m, now));
    }
    if (!report.outcomes.empty()) ++training_cycles_;
    return report;
  }

  std::vector<ScoreRecord> run_scoring_cycle(Tick now) {
    now_ = std::max(now_, now);
    last_issues_.clear();
    std::vector<ScoreRecord> out;
    bool any_due = false;
    for (auto& [id, m] : metrics_) {
      if (now % static_cast<Tick>(m.spec.score_every) != 0) continue;
      any_due = true;
      score_metric(m, now, out);
    }
    if (any_due) ++scoring_cycles_;
    return out;
  }

  std::vector<HealthSnapshot> run_evaluation_cycle(Tick now) {
    now_ = std::max(now_, now);
    std::vector<HealthSnapshot> fleet;
    for (auto& [id, m] : metrics_) {
      double age = 0.0;
      if (m.record) {
        age = static_cast<double>(now - m.record->published_at) / static_cast<double>(m.spec.model_ttl);
        if (m.record->expired_at(now)) age = 1.0;
      }
      if (m.expired_seen) age = 1.0;
      EvaluationOptions eo = options_.evaluation;
      eo.alert_threshold = m.spec.alert_threshold;
      fleet.push_back(snapshot_indicators(id, now, m.log, age, m.training_failed, eo));
    }
    EvaluationOptions eo = options_.evaluation;
    evaluate_fleet(fleet, eo);
    for (auto& s : fleet) {
      auto& m = metrics_.at(s.metric_id);
      m.health = s;
      m.health_history.emplace_back(now, s.health);
      if (store_) {
        store_->write_json(std::filesystem::path("health") / (s.metric_id + ".json"), json(s));
        store_->append_line(std::filesystem::path("health") / (s.metric_id + ".jsonl"), json(s).dump());
      }
    }
    ++evaluation_cycles_;
    return fleet;
  }

  /// Moves the clock forward tick by tick, firing due cycles.
  Tick advance_clock(std::size_t steps) {
    if (steps < 1) throw Error(ErrorKind::InvalidArgument, "advance by at least one step");
    for (std::size_t k = 0; k < steps; ++k) {
      const Tick t = now_ + 1;
      now_ = t;
      run_scoring_cycle(t);
      bool any_due = false;
      for (const auto& [id, m] : metrics_) any_due = any_due || training_due(m, t);
      if (any_due) run_training_cycle(t);
      if (t % static_cast<Tick>(std::max<std::size_t>(options_.evaluate_every, 1)) == 0) run_evaluation_cycle(t);
    }
    if (store_) save();
    return now_;
  }

  Tick now() const { return now_; }
  std::size_t training_cycles() const { return training_cycles_; }
  std::size_t scoring_cycles() const { return scoring_cycles_; }
  std::size_t evaluation_cycles() const { return evaluation_cycles_; }
  const std::vector<ScoringIssue>& last_scoring_issues() const { return last_issues_; }
  const std::vector<ScoreRecord>& results() const { return results_; }
  const std::vector<AlertEvent>& alerts() const { return sink_.delivered(); }
  std::size_t job_count() const { return jobs_.size(); }
  const FileStore* store() const { return store_.get(); }

  std::vector<std::string> metric_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, m] : metrics_) ids.push_back(id);
    return ids;
  }

  const JobSpec& job(const std::string& metric_id) const { return get(metric_id).spec; }
  std::optional<HealthSnapshot> health(const std::string& metric_id) const { return get(metric_id).health; }
  const std::vector<std::pair<Tick, Health>>& health_history(const std::string& metric_id) const {
    return get(metric_id).health_history;
  }
  std::size_t retune_count(const std::string& metric_id) const { return get(metric_id).retune_count; }
  std::size_t tune_generation(const std::string& metric_id) const { return get(metric_id).tune_generation; }
  const ScoreLog& score_log(const std::string& metric_id) const { return get(metric_id).log; }
  const ModelConfig& current_config(const std::string& metric_id) const { return get(metric_id).config; }
  const std::vector<TuneResult>& tune_history(const std::string& metric_id) const { return get(metric_id).tunes; }
  const TimeSeries& series(const std::string& metric_id) const { return get(metric_id).series; }

  /// Active model record, if any (it may be expired).
  std::optional<ModelRecord> active_model(const std::string& metric_id) const { return get(metric_id).record; }
  const TrainedModel* active_trained_model(const std::string& metric_id) const {
    const auto& m = get(metric_id);
    return m.model ? &*m.model : nullptr;
  }
  /// Scoring state of the active model, positioned at the next unscored index.
  const ScoringState& scoring_state(const std::string& metric_id) const { return get(metric_id).state; }
  std::size_t next_score_index(const std::string& metric_id) const { return get(metric_id).next_score; }

  /// Forces a health label, as if an evaluation had produced it.
  void set_health(const std::string& metric_id, Health h, Tick now) {
    auto& m = get(metric_id);
    HealthSnapshot s = m.health.value_or(HealthSnapshot{});
    s.metric_id = metric_id;
    s.timestamp = now;
    s.health = h;
    m.health = s;
  }

  std::vector<MetricStatus> status() const {
    std::vector<MetricStatus> out;
    for (const auto& [id, m] : metrics_) {
      MetricStatus s;
      s.metric_id = id;
      s.job_id = m.spec.job_id;
      s.health = m.health ? m.health->health : Health::Y;
      if (m.record) {
        s.model_id = m.record->model_id;
        s.method = m.record->method;
      }
      s.retune_count = m.retune_count;
      s.tune_generation = m.tune_generation;
      s.scored = m.scored;
      s.alerts = m.alerts;
      out.push_back(std::move(s));
    }
    return out;
  }

  /// Writes state.json (clock and per-metric runtime).
  void save() const {
    if (!store_) return;
    json metrics = json::object();
    for (const auto& [id, m] : metrics_) {
      json log = json::array();
      for (const auto& e : m.log.entries())
        log.push_back({e.timestamp, detail::real_to_json(e.probability), detail::real_to_json(e.observed),
                       detail::real_to_json(e.expected)});
      json jm{{"config", m.config},
              {"truncate_abs", m.truncate_abs ? json(*m.truncate_abs) : json(nullptr)},
              {"model_id", m.record ? json(m.record->model_id) : json(nullptr)},
              {"scoring_state", m.state},
              {"next_score", m.next_score},
              {"log", log},
              {"health", m.health ? json(*m.health) : json(nullptr)},
              {"training_failed", m.training_failed},
              {"expired_seen", m.expired_seen},
              {"last_train_tick", m.last_train_tick ? json(*m.last_train_tick) : json(nullptr)},
              {"retune_count", m.retune_count},
              {"tune_generation", m.tune_generation},
              {"model_counter", m.model_counter},
              {"scored", m.scored},
              {"alerts", m.alerts}};
      metrics[id] = std::move(jm);
    }
    store_->write_json("state.json", json{{"now", now_},
                                          {"training_cycles", training_cycles_},
                                          {"scoring_cycles", scoring_cycles_},
                                          {"evaluation_cycles", evaluation_cycles_},
                                          {"metrics", metrics}});
  }

 private:
  struct MetricRuntime {
    MetricRuntime(JobSpec s, TimeSeries ts) : spec(std::move(s)), series(std::move(ts)) {}

    JobSpec spec;
    TimeSeries series;
    ModelConfig config;
    std::optional<std::size_t> truncate_abs;  ///< truncation as an absolute grid index
    std::optional<TrainedModel> model;
    std::optional<ModelRecord> record;
    ScoringState state;
    std::size_t next_score = 0;
    ScoreLog log;
    std::optional<HealthSnapshot> health;
    std::vector<std::pair<Tick, Health>> health_history;
    bool training_failed = false;
    bool expired_seen = false;
    std::optional<Tick> last_train_tick;
    std::size_t retune_count = 0;
    std::size_t tune_generation = 0;
    std::size_t model_counter = 0;
    std::size_t scored = 0;
    std::size_t alerts = 0;
    std::vector<TuneResult> tunes;
  };

  MetricRuntime& get(const std::string& id) {
    auto it = metrics_.find(id);
    if (it == metrics_.end()) throw Error(ErrorKind::InvalidArgument, "unknown metric '" + id + "'");
    return it->second;
  }
  const MetricRuntime& get(const std::string& id) const { return const_cast<Orchestrator*>(this)->get(id); }

  void add_job(const JobSpec& spec) {
    MetricRuntime m(spec, load_job_series(spec));
    m.config = spec.config;
    m.config.truncate_at.reset();
    if (spec.config.truncate_at) m.truncate_abs = spec.config.truncate_at;
    m.log = ScoreLog(spec.metric_id);
    jobs_[spec.job_id] = spec.metric_id;
    metrics_.emplace(spec.metric_id, std::move(m));
  }

  bool training_due(const MetricRuntime& m, Tick now) const {
    if (now < static_cast<Tick>(m.spec.first_training_tick())) return false;
    if (!m.last_train_tick) return true;
    return now - *m.last_train_tick >= static_cast<Tick>(m.spec.train_every);
  }

  /// Scores observations [next_score, min(now, n)) with the active model.
  void score_metric(MetricRuntime& m, Tick now, std::vector<ScoreRecord>& out) {
    if (!m.model || !m.record) {
      last_issues_.push_back({m.spec.metric_id, ErrorKind::MissingModel});
      return;
    }
    if (m.record->expired_at(now)) {
      m.expired_seen = true;
      last_issues_.push_back({m.spec.metric_id, ErrorKind::ExpiredModel});
      return;
    }
    const std::size_t end = std::min<std::size_t>(static_cast<std::size_t>(std::max<Tick>(now, 0)), m.series.size());
    for (; m.next_score < end; ++m.next_score) {
      const std::size_t k = m.next_score;
      const double y = m.series[k];
      const StepScore sc = score_observation(*m.model, m.state, y, m.config.decision_threshold);
      if (is_missing(y)) continue;
      ScoreRecord r{m.spec.metric_id, m.series.timestamp(k), y, sc.expected, sc.probability,
                    sc.probability >= m.spec.alert_threshold, m.record->model_id};
      m.log.append({r.timestamp, r.probability, r.observed, r.expected});
      ++m.scored;
      if (r.is_anomaly) {
        ++m.alerts;
        for (AlertChannel c : m.spec.channels)
          sink_.emit({r.metric_id, r.timestamp, r.probability, r.observed, r.expected, c});
      }
      if (store_)
        store_->append_line(std::filesystem::path("scores") / (m.spec.metric_id + ".csv"), to_csv_line(r),
                            kScoreCsvHeader);
      if (options_.keep_results) results_.push_back(r);
      out.push_back(std::move(r));
    }
  }

  TrainingOutcome train_metric(MetricRuntime& m, Tick now) {
    TrainingOutcome outcome;
    outcome.metric_id = m.spec.metric_id;
    // Evidence collected under the old model is scored before it is replaced.
    if (m.model && m.record && !m.record->expired_at(now)) {
      std::vector<ScoreRecord> flushed;
      score_metric(m, now, flushed);
    }
    m.last_train_tick = now;

    const std::size_t end = std::min<std::size_t>(static_cast<std::size_t>(now), m.series.size());
    const std::size_t start = end > m.spec.train_window ? end - m.spec.train_window : 0;
    const TimeSeries window = m.series.slice(start, end - start);

    const bool retune = m.health && m.health->health == Health::R;
    if (retune || (m.spec.tune_initial && !m.record && m.tunes.empty())) {
      if (retune) ++m.retune_count;
      outcome.tuned = true;
      try {
        TuneResult r = tune(window, m.spec.tune_budget, m.spec.alpha, m.spec.seed + m.retune_count, options_.tune);
        if (std::isfinite(r.best_cost)) {
          m.config = r.best_config;
          m.truncate_abs.reset();
          if (m.config.truncate_at) m.truncate_abs = start + *m.config.truncate_at;
          m.config.truncate_at.reset();
          ++m.tune_generation;
          if (store_)
            store_->write_json(std::filesystem::path("tuning") /
                                   (m.spec.metric_id + "-" + std::to_string(m.tune_generation) + ".json"),
                               json(r));
        } else {
          outcome.message = "tuning found no finite-cost configuration; ";
        }
        m.tunes.push_back(std::move(r));
      } catch (const Error& e) {
        outcome.message = std::string("tuning failed: ") + e.what() + "; ";
      }
    }
    outcome.tune_generation = m.tune_generation;

    ModelConfig cfg = m.config;
    if (m.truncate_abs && *m.truncate_abs > start && *m.truncate_abs - start + 30 <= window.size())
      cfg.truncate_at = *m.truncate_abs - start;

    std::optional<TrainedModel> fitted;
    try {
      fitted = train_model(window, cfg);
      outcome.status = TrainingStatus::trained;
    } catch (const Error& e) {
      outcome.message += std::string("fit failed: ") + e.what();
      if (cfg.method == Method::structural) {
        ModelConfig fallback = cfg;
        fallback.method = Method::filtering;
        try {
          fitted = train_model(window, fallback);
          outcome.status = TrainingStatus::fallback;
        } catch (const Error& e2) {
          outcome.message += std::string("; fallback failed: ") + e2.what();
        }
      }
    }
    if (!fitted) {
      outcome.status = TrainingStatus::failed;
      m.training_failed = true;
      return outcome;
    }

    m.training_failed = false;
    m.expired_seen = false;
    ++m.model_counter;
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-m%04zu", m.model_counter);
    ModelRecord rec;
    rec.model_id = m.spec.metric_id + suffix;
    rec.metric_id = m.spec.metric_id;
    rec.method = fitted->method();
    rec.config = fitted->config;
    rec.published_at = now;
    rec.expires_at = now + static_cast<Tick>(m.spec.model_ttl);
    rec.tune_generation = m.tune_generation;
    rec.window_start = start;
    m.state = end_of_training_state(*fitted);
    m.model = std::move(fitted);
    m.record = rec;
    m.next_score = end;
    m.log.clear();
    if (store_) {
      json doc = rec;
      doc["payload"] = *m.model;
      store_->write_json(std::filesystem::path("models") / (rec.model_id + ".json"), doc);
    }
    outcome.model_id = rec.model_id;
    if (options_.on_publish) options_.on_publish(rec, *m.model, end);
    return outcome;
  }

  void restore(const json& st) {
    now_ = st.at("now").get<Tick>();
    training_cycles_ = st.value("training_cycles", std::size_t{0});
    scoring_cycles_ = st.value("scoring_cycles", std::size_t{0});
    evaluation_cycles_ = st.value("evaluation_cycles", std::size_t{0});
    for (const auto& [id, jm] : st.at("metrics").items()) {
      auto it = metrics_.find(id);
      if (it == metrics_.end()) continue;
      auto& m = it->second;
      m.config = jm.at("config").get<ModelConfig>();
      if (!jm.at("truncate_abs").is_null()) m.truncate_abs = jm["truncate_abs"].get<std::size_t>();
      if (!jm.at("model_id").is_null()) {
        const auto model_id = jm["model_id"].get<std::string>();
        const json doc = store_->read_json(std::filesystem::path("models") / (model_id + ".json"));
        m.record = doc.get<ModelRecord>();
        m.model = doc.at("payload").get<TrainedModel>();
      }
      m.state = jm.at("scoring_state").get<ScoringState>();
      m.next_score = jm.at("next_score").get<std::size_t>();
      for (const auto& e : jm.at("log"))
        m.log.append({e[0].get<std::int64_t>(), detail::real_from_json(e[1]), detail::real_from_json(e[2]),
                      detail::real_from_json(e[3])});
      if (!jm.at("health").is_null()) m.health = jm["health"].get<HealthSnapshot>();
      m.training_failed = jm.at("training_failed").get<bool>();
      m.expired_seen = jm.at("expired_seen").get<bool>();
      if (!jm.at("last_train_tick").is_null()) m.last_train_tick = jm["last_train_tick"].get<Tick>();
      m.retune_count = jm.at("retune_count").get<std::size_t>();
      m.tune_generation = jm.at("tune_generation").get<std::size_t>();
      m.model_counter = jm.at("model_counter").get<std::size_t>();
      m.scored = jm.at("scored").get<std::size_t>();
      m.alerts = jm.at("alerts").get<std::size_t>();
    }
  }

  OrchestratorOptions options_;
  std::unique_ptr<FileStore> store_;
  AlertSink sink_{nullptr, nullptr};
  std::map<std::string, std::string> jobs_;  ///< job_id -> metric_id
  std::map<std::string, MetricRuntime> metrics_;
  std::vector<ScoreRecord> results_;
  std::vector<ScoringIssue> last_issues_;
  Tick now_ = 0;
  std::size_t training_cycles_ = 0;
  std::size_t scoring_cycles_ = 0;
  std::size_t evaluation_cycles_ = 0;
};

}  // namespace autoad
