#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "autoad/csv.hpp"
#include "autoad/error.hpp"
#include "autoad/series.hpp"
#include "json.hpp"

namespace autoad {

/// Closed interval of epoch seconds.
struct AnomalyWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool contains(std::int64_t t) const { return t >= start && t <= end; }
  bool operator==(const AnomalyWindow&) const = default;
};

struct LabeledBenchSeries {
  std::string name;
  TimeSeries series;
  std::vector<AnomalyWindow> anomaly_windows;
  std::vector<int> point_labels;
  std::size_t gaps = 0;  ///< grid points absent from the source file (held as MISSING)
};

/// Sorts and merges overlapping or touching windows.
inline std::vector<AnomalyWindow> merge_windows(std::vector<AnomalyWindow> w) {
  for (const auto& x : w)
    if (x.end < x.start) throw Error(ErrorKind::InvalidArgument, "anomaly window ends before it starts");
  std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  std::vector<AnomalyWindow> out;
  for (const auto& x : w) {
    if (!out.empty() && x.start <= out.back().end) out.back().end = std::max(out.back().end, x.end);
    else out.push_back(x);
  }
  return out;
}

inline std::vector<int> window_labels(const TimeSeries& ts, const std::vector<AnomalyWindow>& windows) {
  std::vector<int> labels(ts.size(), 0);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto t = ts.timestamp(i);
    for (const auto& w : windows)
      if (w.contains(t)) {
        labels[i] = 1;
        break;
      }
  }
  return labels;
}

inline LabeledBenchSeries make_labeled(std::string name, TimeSeries ts, std::vector<AnomalyWindow> windows,
                                       std::size_t gaps = 0) {
  windows = merge_windows(std::move(windows));
  auto labels = window_labels(ts, windows);
  return {std::move(name), std::move(ts), std::move(windows), std::move(labels), gaps};
}

/// Windows for one dataset from a combined-windows document, whose keys are
/// paths such as `realKnownCause/nyc_taxi.csv`. Matching is by file stem.
inline std::vector<AnomalyWindow> windows_for(const nlohmann::json& doc, const std::string& name) {
  for (const auto& [key, value] : doc.items()) {
    if (std::filesystem::path(key).stem().string() != name) continue;
    std::vector<AnomalyWindow> out;
    for (const auto& w : value) {
      if (!w.is_array() || w.size() != 2)
        throw Error(ErrorKind::MalformedCsv, "window entry for " + name + " is not a [start, end] pair");
      out.push_back({parse_timestamp(w[0].get<std::string>()), parse_timestamp(w[1].get<std::string>())});
    }
    return out;
  }
  throw Error(ErrorKind::UnknownDataset, "'" + name + "' has no entry in the windows file");
}

/// Reads an NAB data file and attaches its windows. The grid step is the
/// file's most common spacing; absent grid points are MISSING and counted.
inline LabeledBenchSeries load_nab(const std::filesystem::path& data_csv_path,
                                   const std::filesystem::path& windows_json_path) {
  const std::string name = data_csv_path.stem().string();
  std::ifstream win(windows_json_path);
  if (!win) throw Error(ErrorKind::Io, "cannot open " + windows_json_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(win);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedCsv, "windows file: " + std::string(e.what()));
  }
  auto windows = windows_for(doc, name);
  CsvSeries csv = read_series_csv(data_csv_path.string());
  return make_labeled(name, std::move(csv.series), std::move(windows), csv.materialized);
}

/// Coarsens to `target`. The series is first front-padded with MISSING so
/// buckets align with multiples of the target step since the epoch (UTC
/// hours and days). A bucket is labeled when any source point in it is.
inline LabeledBenchSeries aggregate_labeled(const LabeledBenchSeries& lbs, Frequency target,
                                            AggregateKind agg = AggregateKind::mean) {
  const auto tstep = step_of(target);
  const auto& ts = lbs.series;
  if (!tstep || *tstep <= ts.step() || *tstep % ts.step() != 0)
    throw Error(ErrorKind::IncompatibleFrequency, "target must be a strict integer multiple of the source step");
  const std::int64_t start = ts.start_epoch();
  std::int64_t aligned = start - (start % *tstep + *tstep) % *tstep;
  if ((start - aligned) % ts.step() != 0) aligned = start;
  const auto pad = static_cast<std::size_t>((start - aligned) / ts.step());

  std::vector<double> values(pad, kMissing);
  values.insert(values.end(), ts.values().begin(), ts.values().end());
  std::vector<int> labels(pad, 0);
  labels.insert(labels.end(), lbs.point_labels.begin(), lbs.point_labels.end());
  const TimeSeries padded(aligned, ts.step(), std::move(values));
  TimeSeries coarse = aggregate(padded, target, agg);

  const auto ratio = static_cast<std::size_t>(*tstep / ts.step());
  std::vector<int> coarse_labels(coarse.size(), 0);
  for (std::size_t b = 0; b < coarse.size(); ++b)
    for (std::size_t j = b * ratio; j < (b + 1) * ratio; ++j)
      if (labels[j]) {
        coarse_labels[b] = 1;
        break;
      }
  return {lbs.name, std::move(coarse), lbs.anomaly_windows, std::move(coarse_labels), lbs.gaps};
}

}  // namespace autoad
