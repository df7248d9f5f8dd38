#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "autoad/bench/metrics.hpp"
#include "autoad/bench/nab.hpp"
#include "autoad/bench/replay.hpp"
#include "autoad/bench/runtime.hpp"
#include "autoad/detail/rng.hpp"

namespace autoad {

/// The six NAB series of the comparison.
inline std::vector<std::string> nab_datasets() {
  return {"Twitter_volume_CRM", "Twitter_volume_FB", "Twitter_volume_GOOG",
          "nyc_taxi",           "machine_temperature_system_failure", "cpu_utilization_asg_misconfiguration"};
}

/// Published values for one dataset; index 0 = daily, 1 = hourly.
struct DatasetReference {
  std::string dataset;
  double autoad_auc[2];
  int autoad_retunes[2];
  double prophet_auc[2], luminol_auc[2], adtk_auc[2];
  double autoad_mdape[2], autoad_rmse[2];
  double prophet_mdape[2], prophet_rmse[2];
  double arima_mdape[2], arima_rmse[2];
};

inline const std::vector<DatasetReference>& dataset_references() {
  static const std::vector<DatasetReference> refs{
      {"Twitter_volume_CRM", {0.75267, 0.87414}, {3, 4}, {0.67287, 0.64670}, {0.51223, 0.62413}, {0.62131, 0.58854},
       {28.572, 54.340}, {396.090, 30.922}, {57.659, 51.689}, {550.419, 45.997}, {40.835, 54.524}, {450.688, 27.677}},
      {"Twitter_volume_FB", {0.70909, 0.76227}, {1, 3}, {0.43889, 0.65513}, {0.46233, 0.32812}, {0.68889, 0.48214},
       {11.137, 35.468}, {1119.641, 96.602}, {14.287, 43.691}, {1098.187, 139.053}, {16.951, 40.719},
       {1048.337, 122.255}},
      {"Twitter_volume_GOOG", {0.72889, 0.76667}, {3, 3}, {0.66433, 0.60139}, {0.57244, 0.61250}, {0.68027, 0.51250},
       {24.004, 27.877}, {1619.16, 96.107}, {19.830, 52.916}, {1380.836, 179.444}, {16.607, 40.684},
       {1619.820, 123.197}},
      {"nyc_taxi", {0.65151, 0.72483}, {3, 5}, {0.60606, 0.87413}, {0.68687, 0.50233}, {0.64141, 0.73958},
       {5.664, 15.728}, {79176.01, 8499.727}, {2.135, 27.015}, {37595.87, 14614.37}, {5.061, 27.403},
       {50913.99, 12024.55}},
      {"machine_temperature_system_failure", {0.96787, 0.99623}, {2, 3}, {0.93333, 0.98839}, {0.79333, 0.88710},
       {0.58333, 0.52984}, {4.855, 3.735}, {2134.686, 96.794}, {12.808, 8.893}, {3690.954, 154.710},
       {8.049, 4.362}, {2079.783, 98.074}},
      {"cpu_utilization_asg_misconfiguration", {0.72667, 0.44167}, {3, 3}, {0.63333, 0.51250}, {0.32917, 0.74861},
       {0.74167, 0.50833}, {5.555, 7.112}, {675.602, 37.017}, {4.717, 6.562}, {574.292, 55.538}, {6.672, 5.184},
       {817.155, 28.292}},
  };
  return refs;
}

inline const DatasetReference* find_reference(const std::string& dataset) {
  for (const auto& r : dataset_references())
    if (r.dataset == dataset) return &r;
  return nullptr;
}

/// Published per-training times in seconds; NaN where no value exists.
struct RuntimeReference {
  std::size_t length;
  double autoad[4];
  double prophet, luminol, adtk;
};

inline const std::vector<RuntimeReference>& runtime_references() {
  static const std::vector<RuntimeReference> refs{
      {1000, {2.759, 3.619, 4.962, 7.890}, 2.015, 0.030, 0.038},
      {2000, {3.881, 4.694, 6.122, 8.118}, 2.189, 0.055, 0.042},
      {3000, {4.252, 5.620, 7.587, 8.477}, 3.251, 0.062, 0.053},
  };
  return refs;
}

inline constexpr const char* kReferenceHardware = "2.8 GHz Quad-Core Intel Core i7";

/// Synthetic 5-minute labeled series used when no NAB files are present.
/// fixture_daily_spikes: daily cycle with five 3-hour bursts.
/// fixture_level_shift: level triples on day 35, plus a 1-hour spike on day 45.
inline LabeledBenchSeries bench_fixture(const std::string& name) {
  constexpr std::int64_t origin = 1704067200;  // 2024-01-01T00:00:00Z
  constexpr std::size_t per_day = 288, days = 60;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> v(per_day * days);
  std::vector<AnomalyWindow> windows;
  auto window = [&](std::size_t day, std::size_t hour, std::size_t hours) {
    const std::int64_t s = origin + static_cast<std::int64_t>(day * 86400 + hour * 3600);
    windows.push_back({s, s + static_cast<std::int64_t>(hours * 3600) - 300});
  };
  if (name == "fixture_daily_spikes") {
    detail::Rng rng(101);
    for (std::size_t t = 0; t < v.size(); ++t)
      v[t] = 100.0 + 20.0 * std::sin(two_pi * static_cast<double>(t) / per_day) + 3.0 * rng.normal();
    for (std::size_t day : {12, 20, 33, 41, 52}) window(day, 10, 3);
    for (const auto& w : windows)
      for (std::int64_t s = w.start; s <= w.end; s += 300) v[static_cast<std::size_t>((s - origin) / 300)] += 60.0;
  } else if (name == "fixture_level_shift") {
    detail::Rng rng(202);
    for (std::size_t t = 0; t < v.size(); ++t) {
      const double base = 50.0 + 5.0 * std::sin(two_pi * static_cast<double>(t) / per_day) + 2.0 * rng.normal();
      v[t] = t >= 35 * per_day ? 3.0 * base : base;
    }
    window(35, 0, 6);
    window(45, 12, 1);
    for (std::size_t t = 45 * per_day + 144; t < 45 * per_day + 156; ++t) v[t] += 120.0;
  } else {
    throw Error(ErrorKind::UnknownDataset, "no fixture named '" + name + "'");
  }
  return make_labeled(name, TimeSeries(origin, 300, std::move(v)), std::move(windows));
}

inline std::vector<std::string> bench_fixtures() { return {"fixture_daily_spikes", "fixture_level_shift"}; }

struct BenchConfig {
  std::optional<std::filesystem::path> nab_dir;
  std::vector<std::string> datasets = nab_datasets();
  std::vector<Frequency> freqs{Frequency::hourly, Frequency::daily};
  AggregateKind agg = AggregateKind::mean;
  bool fixtures = true;
  bool runtime = false;
  std::vector<std::size_t> runtime_lengths{1000, 2000, 3000};
  std::size_t max_triggers = 3;
  std::size_t tune_budget = 30;
  std::uint64_t seed = 0;
};

struct AucRow {
  std::string dataset;
  Frequency freq = Frequency::hourly;
  bool fixture = false;
  std::string status;  ///< ok, missing, single_class, too_short, failed
  std::size_t n_scored = 0;
  std::size_t n_anomalous = 0;
  double auc = std::numeric_limits<double>::quiet_NaN();
  std::size_t retune_count = 0;
};

struct ForecastRow {
  std::string dataset;
  Frequency freq = Frequency::hourly;
  bool fixture = false;
  std::string status;  ///< ok, missing, no_points, too_short, failed
  std::size_t horizon = 0;
  std::size_t n_points = 0;
  double mdape = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
};

struct BenchReport {
  AggregateKind agg = AggregateKind::mean;
  std::uint64_t seed = 0;
  std::vector<AucRow> auc;
  std::vector<ForecastRow> forecast;
  std::vector<RuntimeRow> runtime;
  std::string hardware;
  /// Pooled over NAB rows when any ran, else over fixture rows.
  std::vector<RocPoint> roc;
  double combined_auc = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> missing;  ///< absent input files

  const AucRow* find_auc(const std::string& dataset, Frequency f) const {
    for (const auto& r : auc)
      if (r.dataset == dataset && r.freq == f) return &r;
    return nullptr;
  }
  const ForecastRow* find_forecast(const std::string& dataset, Frequency f) const {
    for (const auto& r : forecast)
      if (r.dataset == dataset && r.freq == f) return &r;
    return nullptr;
  }
};

/// `<nab_dir>/data/**/<name>.csv`, if present.
inline std::optional<std::filesystem::path> find_nab_file(const std::filesystem::path& nab_dir,
                                                          const std::string& name) {
  const auto data = nab_dir / "data";
  std::error_code ec;
  if (!std::filesystem::is_directory(data, ec)) return std::nullopt;
  std::optional<std::filesystem::path> best;
  for (const auto& e : std::filesystem::recursive_directory_iterator(data, ec))
    if (e.is_regular_file() && e.path().filename() == name + ".csv")
      if (!best || e.path() < *best) best = e.path();
  return best;
}

inline std::filesystem::path nab_windows_path(const std::filesystem::path& nab_dir) {
  return nab_dir / "labels" / "combined_windows.json";
}

namespace detail {

struct PooledScores {
  std::vector<double> probabilities;
  std::vector<int> labels;

  void add(const ScoredLabels& s) {
    probabilities.insert(probabilities.end(), s.probabilities.begin(), s.probabilities.end());
    labels.insert(labels.end(), s.labels.begin(), s.labels.end());
  }
};

inline void bench_one(const LabeledBenchSeries& raw, bool fixture, const BenchConfig& config, BenchReport& report,
                      PooledScores& pooled) {
  for (Frequency f : config.freqs) {
    AucRow a{raw.name, f, fixture, "ok"};
    ForecastRow fr{raw.name, f, fixture, "ok", forecast_horizon(f)};
    try {
      const LabeledBenchSeries lbs = aggregate_labeled(raw, f, config.agg);
      JobSpec spec = replay_spec(f, config.seed);
      spec.tune_budget = config.tune_budget;
      const ReplayResult r = replay(lbs, spec, ReplayOptions{{}, fr.horizon});
      a.retune_count = r.retune_count;
      const ScoredLabels s = scored_labels(lbs, r);
      a.n_scored = s.labels.size();
      a.n_anomalous = static_cast<std::size_t>(std::count(s.labels.begin(), s.labels.end(), 1));
      if (a.n_anomalous == 0 || a.n_anomalous == a.n_scored) {
        a.status = "single_class";
      } else {
        a.auc = autoad::auc(s.probabilities, s.labels);
        pooled.add(s);
      }
      const ForecastPairs p = forecast_pairs(lbs, r);
      fr.n_points = p.pred.size();
      if (p.pred.empty()) {
        fr.status = "no_points";
      } else {
        const auto m = forecast_metrics(p.pred, p.actual);
        fr.mdape = m.mdape;
        fr.rmse = m.rmse;
      }
    } catch (const Error& e) {
      const bool short_series = e.kind() == ErrorKind::SeriesTooShort || e.kind() == ErrorKind::IncompatibleFrequency;
      a.status = fr.status = short_series ? "too_short" : "failed";
    }
    report.auc.push_back(a);
    report.forecast.push_back(fr);
  }
}

}  // namespace detail

/// Fixtures first, then the requested NAB datasets. Absent NAB files give
/// rows with status "missing"; MissingData only when nothing could run.
inline BenchReport run_benchmark(const BenchConfig& config) {
  BenchReport report;
  report.agg = config.agg;
  report.seed = config.seed;
  report.hardware = hardware_description();
  detail::PooledScores fixture_pool, nab_pool;
  std::size_t ran = 0;

  if (config.fixtures)
    for (const auto& name : bench_fixtures()) {
      detail::bench_one(bench_fixture(name), true, config, report, fixture_pool);
      ++ran;
    }

  for (const auto& name : config.datasets) {
    std::optional<std::filesystem::path> data;
    std::optional<std::filesystem::path> windows;
    if (config.nab_dir) {
      data = find_nab_file(*config.nab_dir, name);
      if (std::filesystem::exists(nab_windows_path(*config.nab_dir))) windows = nab_windows_path(*config.nab_dir);
    }
    if (!data || !windows) {
      report.missing.push_back(data ? nab_windows_path(*config.nab_dir).string() : name + ".csv");
      for (Frequency f : config.freqs) {
        report.auc.push_back({name, f, false, "missing"});
        report.forecast.push_back({name, f, false, "missing", forecast_horizon(f)});
      }
      continue;
    }
    detail::bench_one(load_nab(*data, *windows), false, config, report, nab_pool);
    ++ran;
  }

  if (config.runtime) {
    report.runtime = measure_runtime(config.runtime_lengths, config.max_triggers, config.tune_budget, config.seed);
    ++ran;
  }
  if (ran == 0) {
    std::string list;
    for (const auto& m : report.missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorKind::MissingData, "nothing to benchmark; absent: " + list);
  }

  const auto& pool = nab_pool.labels.empty() ? fixture_pool : nab_pool;
  if (!pool.labels.empty()) {
    report.roc = roc_points(pool.probabilities, pool.labels);
    report.combined_auc = auc(pool.probabilities, pool.labels);
  }
  return report;
}

namespace detail {

inline std::string fmt(double v, int digits) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline int ref_index(Frequency f) { return f == Frequency::daily ? 0 : 1; }

}  // namespace detail

/// Writes auc.csv, forecast.csv, roc_points.csv and, when timed, runtime.csv.
/// Reference columns hold published values; empty where none exists.
inline void write_report(const BenchReport& report, const std::filesystem::path& out_dir) {
  using detail::fmt;
  std::filesystem::create_directories(out_dir);
  const std::string agg(to_string(report.agg));

  std::string auc = "dataset,freq,aggregation,status,n_scored,n_anomalous,auc,retune_count,"
                    "ref_autoad_auc,ref_autoad_retunes,ref_prophet_auc,ref_luminol_auc,ref_adtk_auc\n";
  for (const auto& r : report.auc) {
    const auto* ref = find_reference(r.dataset);
    const int k = detail::ref_index(r.freq);
    auc += r.dataset + ',' + std::string(to_string(r.freq)) + ',' + agg + ',' + r.status + ',' +
           std::to_string(r.n_scored) + ',' + std::to_string(r.n_anomalous) + ',' + fmt(r.auc, 6) + ',' +
           (r.status == "missing" ? "" : std::to_string(r.retune_count)) + ',';
    if (ref)
      auc += fmt(ref->autoad_auc[k], 5) + ',' + std::to_string(ref->autoad_retunes[k]) + ',' +
             fmt(ref->prophet_auc[k], 5) + ',' + fmt(ref->luminol_auc[k], 5) + ',' + fmt(ref->adtk_auc[k], 5);
    else
      auc += ",,,,";
    auc += '\n';
  }
  detail::write_text(out_dir / "auc.csv", auc);

  std::string fc = "dataset,freq,aggregation,status,horizon,n_points,mdape_pct,rmse,"
                   "ref_autoad_mdape_pct,ref_autoad_rmse,ref_prophet_mdape_pct,ref_prophet_rmse,"
                   "ref_auto_arima_mdape_pct,ref_auto_arima_rmse\n";
  for (const auto& r : report.forecast) {
    const auto* ref = find_reference(r.dataset);
    const int k = detail::ref_index(r.freq);
    fc += r.dataset + ',' + std::string(to_string(r.freq)) + ',' + agg + ',' + r.status + ',' +
          std::to_string(r.horizon) + ',' + std::to_string(r.n_points) + ',' + fmt(r.mdape, 3) + ',' +
          fmt(r.rmse, 3) + ',';
    if (ref)
      fc += fmt(ref->autoad_mdape[k], 3) + ',' + fmt(ref->autoad_rmse[k], 3) + ',' + fmt(ref->prophet_mdape[k], 3) +
            ',' + fmt(ref->prophet_rmse[k], 3) + ',' + fmt(ref->arima_mdape[k], 3) + ',' + fmt(ref->arima_rmse[k], 3);
    else
      fc += ",,,,,";
    fc += '\n';
  }
  detail::write_text(out_dir / "forecast.csv", fc);

  std::string roc = "fpr,tpr\n";
  for (const auto& p : report.roc) roc += fmt(p.fpr, 6) + ',' + fmt(p.tpr, 6) + '\n';
  detail::write_text(out_dir / "roc_points.csv", roc);

  if (!report.runtime.empty()) {
    std::string rt = "length,triggers,seconds,threads,hardware,ref_autoad_seconds,ref_prophet_seconds,"
                     "ref_luminol_seconds,ref_adtk_seconds,ref_hardware\n";
    for (const auto& r : report.runtime) {
      rt += std::to_string(r.length) + ',' + std::to_string(r.triggers) + ',' + fmt(r.seconds, 3) + ",1,\"" +
            report.hardware + "\",";
      const RuntimeReference* ref = nullptr;
      for (const auto& x : runtime_references())
        if (x.length == r.length) ref = &x;
      if (ref && r.triggers < 4) {
        rt += fmt(ref->autoad[r.triggers], 3) + ',';
        if (r.triggers == 0) rt += fmt(ref->prophet, 3) + ',' + fmt(ref->luminol, 3) + ',' + fmt(ref->adtk, 3);
        else rt += ",,";
        rt += std::string(",\"") + kReferenceHardware + "\"";
      } else {
        rt += ",,,,";
      }
      rt += '\n';
    }
    detail::write_text(out_dir / "runtime.csv", rt);
  }
}

}  // namespace autoad
