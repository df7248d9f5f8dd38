#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "autoad/csv.hpp"
#include "autoad/orchestrator/job.hpp"
#include "autoad/orchestrator/store.hpp"

namespace autoad {

struct AlertEvent {
  std::string metric_id;
  std::int64_t timestamp = 0;
  double anomaly_probability = 0.0;
  double observed = 0.0;
  double expected = 0.0;
  AlertChannel channel = AlertChannel::stdout_sink;
};

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Fans alerts out to the configured channels. Every delivered event is also
/// kept in memory; the webhook stub only records the payload it would post.
class AlertSink {
 public:
  explicit AlertSink(std::ostream* out = nullptr, const FileStore* store = nullptr) : out_(out), store_(store) {}

  void emit(const AlertEvent& e) {
    switch (e.channel) {
      case AlertChannel::stdout_sink:
        if (out_)
          *out_ << "ALERT " << e.metric_id << ' ' << format_timestamp(e.timestamp) << " p=" << e.anomaly_probability
                << " observed=" << e.observed << " expected=" << e.expected << '\n';
        break;
      case AlertChannel::file:
        if (store_)
          store_->append_line("alerts.csv",
                              e.metric_id + ',' + std::to_string(e.timestamp) + ',' +
                                  format_real(e.anomaly_probability) + ',' + format_real(e.observed) + ',' +
                                  format_real(e.expected),
                              "metric_id,timestamp,probability,observed,expected");
        break;
      case AlertChannel::webhook_stub: {
        const json payload{{"metric_id", e.metric_id},
                           {"timestamp", e.timestamp},
                           {"probability", detail::real_to_json(e.anomaly_probability)},
                           {"observed", detail::real_to_json(e.observed)},
                           {"expected", detail::real_to_json(e.expected)}};
        if (store_) store_->append_line("webhook_outbox.jsonl", payload.dump());
        break;
      }
    }
    delivered_.push_back(e);
  }

  const std::vector<AlertEvent>& delivered() const { return delivered_; }

 private:
  std::ostream* out_;
  const FileStore* store_;
  std::vector<AlertEvent> delivered_;
};

}  // namespace autoad
