#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoad/config.hpp"
#include "autoad/csv.hpp"
#include "autoad/error.hpp"
#include "autoad/serialize.hpp"
#include "autoad/series.hpp"

namespace autoad {

enum class AlertChannel { stdout_sink, file, webhook_stub };

constexpr std::string_view to_string(AlertChannel c) {
  switch (c) {
    case AlertChannel::stdout_sink: return "stdout";
    case AlertChannel::file: return "file";
    case AlertChannel::webhook_stub: return "webhook_stub";
  }
  return "?";
}

inline AlertChannel alert_channel_from_string(std::string_view s) {
  if (s == "stdout") return AlertChannel::stdout_sink;
  if (s == "file") return AlertChannel::file;
  if (s == "webhook_stub") return AlertChannel::webhook_stub;
  throw Error(ErrorKind::InvalidSpec, "unknown alert channel '" + std::string(s) + "'");
}

/// One monitored metric. Cadences are in simulated clock ticks; the
/// observation with grid index k becomes available at tick k + 1.
struct JobSpec {
  std::string job_id;
  std::string metric_id;
  std::string source;          ///< CSV path; empty for an inline series
  std::vector<double> values;  ///< inline series (NaN = missing)
  std::int64_t start = 0;      ///< inline series only
  std::int64_t step = 3600;
  std::size_t train_every = 48;
  std::size_t score_every = 1;
  std::size_t model_ttl = 96;
  std::size_t initial_train = 0;  ///< first training tick; max(30, 2 * train_every) when 0
  std::size_t train_window = 1000;
  double alpha = 0.5;
  double alert_threshold = 0.99;
  std::size_t tune_budget = 30;
  bool tune_initial = false;  ///< tune before the first training; not counted as a retune
  std::uint64_t seed = 0;
  ModelConfig config{};
  std::vector<AlertChannel> channels{AlertChannel::stdout_sink};

  std::size_t first_training_tick() const {
    return initial_train ? initial_train : std::max<std::size_t>(30, 2 * train_every);
  }

  void validate() const {
    auto bad = [](const std::string& what) { return Error(ErrorKind::InvalidSpec, what); };
    auto valid_id = [](const std::string& id) {
      if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
      for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
      return true;
    };
    if (!valid_id(job_id)) throw bad("job_id must be non-empty [A-Za-z0-9._-]");
    if (!valid_id(metric_id)) throw bad("metric_id must be non-empty [A-Za-z0-9._-]");
    if (source.empty() == values.empty()) throw bad("exactly one of source and values must be given");
    if (step <= 0) throw bad("step must be positive");
    if (score_every < 1 || train_every < 1) throw bad("cadences must be at least one tick");
    if (score_every > train_every) throw bad("score_every must not exceed train_every");
    if (model_ttl < train_every) throw bad("model_ttl must be at least train_every");
    if (train_window < 30) throw bad("train_window must be at least 30");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw bad("alpha must lie in [0,1]");
    if (!(alert_threshold > 0.0 && alert_threshold < 1.0)) throw bad("alert_threshold must lie in (0,1)");
    if (tune_budget < 10) throw bad("tune_budget must be at least 10");
    try {
      config.validate();
    } catch (const Error& e) {
      throw bad(e.what());
    }
  }

  bool operator==(const JobSpec& o) const {
    auto same_values = [&] {
      if (values.size() != o.values.size()) return false;
      for (std::size_t i = 0; i < values.size(); ++i)
        if (!(values[i] == o.values[i] || (is_missing(values[i]) && is_missing(o.values[i])))) return false;
      return true;
    };
    return job_id == o.job_id && metric_id == o.metric_id && source == o.source && same_values() &&
           start == o.start && step == o.step && train_every == o.train_every && score_every == o.score_every &&
           model_ttl == o.model_ttl && initial_train == o.initial_train && train_window == o.train_window &&
           alpha == o.alpha && alert_threshold == o.alert_threshold && tune_budget == o.tune_budget &&
           tune_initial == o.tune_initial &&
           seed == o.seed && config == o.config && channels == o.channels;
  }
};

/// The metric's full series, from the CSV source or the inline values.
inline TimeSeries load_job_series(const JobSpec& spec) {
  if (!spec.source.empty()) return read_series_csv(spec.source).series;
  return TimeSeries(spec.start, spec.step, spec.values);
}

inline void to_json(json& j, const JobSpec& s) {
  json channels = json::array();
  for (auto c : s.channels) channels.push_back(to_string(c));
  j = json{{"job_id", s.job_id},
           {"metric_id", s.metric_id},
           {"train_every", s.train_every},
           {"score_every", s.score_every},
           {"model_ttl", s.model_ttl},
           {"initial_train", s.initial_train},
           {"train_window", s.train_window},
           {"alpha", s.alpha},
           {"alert_threshold", s.alert_threshold},
           {"tune_budget", s.tune_budget},
           {"tune_initial", s.tune_initial},
           {"seed", s.seed},
           {"config", s.config},
           {"channels", channels}};
  if (!s.source.empty()) {
    j["source"] = s.source;
  } else {
    j["values"] = detail::reals_to_json(s.values);
    j["start"] = s.start;
    j["step"] = s.step;
  }
}

inline void from_json(const json& j, JobSpec& s) {
  try {
    s = JobSpec{};
    s.job_id = j.at("job_id").get<std::string>();
    s.metric_id = j.at("metric_id").get<std::string>();
    s.source = j.value("source", std::string{});
    if (j.contains("values")) s.values = detail::reals_from_json(j["values"]);
    s.start = j.value("start", s.start);
    s.step = j.value("step", s.step);
    s.train_every = j.value("train_every", s.train_every);
    s.score_every = j.value("score_every", s.score_every);
    s.model_ttl = j.value("model_ttl", s.model_ttl);
    s.initial_train = j.value("initial_train", s.initial_train);
    s.train_window = j.value("train_window", s.train_window);
    s.alpha = j.value("alpha", s.alpha);
    s.alert_threshold = j.value("alert_threshold", s.alert_threshold);
    s.tune_budget = j.value("tune_budget", s.tune_budget);
    s.tune_initial = j.value("tune_initial", s.tune_initial);
    s.seed = j.value("seed", s.seed);
    if (j.contains("config")) s.config = j["config"].get<ModelConfig>();
    if (j.contains("channels")) {
      s.channels.clear();
      for (const auto& c : j["channels"]) s.channels.push_back(alert_channel_from_string(c.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, e.what());
  }
}

}  // namespace autoad
