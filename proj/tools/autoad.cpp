#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "autoad/autoad.hpp"

namespace fs = std::filesystem;
using namespace autoad;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_register(const fs::path& spec_path, const fs::path& data_dir) {
  std::ifstream in(spec_path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + spec_path.string());
  JobSpec spec = json::parse(in).get<JobSpec>();
  if (!spec.source.empty() && fs::path(spec.source).is_relative())
    spec.source = fs::absolute(spec_path.parent_path() / spec.source).lexically_normal().string();
  Orchestrator orch = Orchestrator::open(data_dir);
  const auto id = orch.register_job(spec);
  orch.save();
  std::cout << "registered " << id << " (metric " << spec.metric_id << ")\n";
  return 0;
}

int cmd_run(Tick until, const fs::path& data_dir) {
  OrchestratorOptions opt;
  opt.alert_stream = &std::cout;
  opt.keep_results = false;
  Orchestrator orch = Orchestrator::open(data_dir, opt);
  if (orch.job_count() == 0) throw Error(ErrorKind::InvalidArgument, "no registered jobs in " + data_dir.string());
  if (until > orch.now()) orch.advance_clock(static_cast<std::size_t>(until - orch.now()));
  std::cout << "clock " << orch.now() << ": " << orch.training_cycles() << " training, " << orch.scoring_cycles()
            << " scoring, " << orch.evaluation_cycles() << " evaluation cycles\n";
  return 0;
}

int cmd_status(const fs::path& data_dir) {
  Orchestrator orch = Orchestrator::open(data_dir);
  std::printf("clock %lld\n", static_cast<long long>(orch.now()));
  std::printf("%-24s %-16s %-6s %-22s %-10s %7s %7s %7s\n", "metric", "job", "health", "model", "method", "retunes",
              "scored", "alerts");
  for (const auto& s : orch.status())
    std::printf("%-24s %-16s %-6s %-22s %-10s %7zu %7zu %7zu\n", s.metric_id.c_str(), s.job_id.c_str(),
                std::string(to_string(s.health)).c_str(), s.model_id.empty() ? "-" : s.model_id.c_str(),
                s.method ? std::string(to_string(*s.method)).c_str() : "-", s.retune_count, s.scored, s.alerts);
  return 0;
}

int cmd_eval(const std::string& metric, const std::string& curves_out, const fs::path& data_dir) {
  Orchestrator orch = Orchestrator::open(data_dir);
  EvaluationOptions eo;
  eo.alert_threshold = orch.job(metric).alert_threshold;
  const auto curves = log_curves(orch.score_log(metric), eo);
  const auto h = orch.health(metric);
  std::cout << "metric " << metric << " log " << orch.score_log(metric).size() << " entries";
  if (h) std::cout << ", health " << to_string(h->health) << ", anomaly rate " << fixed(h->anomaly_rate, 4);
  std::cout << '\n';
  if (!curves) {
    std::cout << "not enough stable scores for MV/EM curves\n";
    return curves_out.empty() ? 0 : 2;
  }
  const auto c = summarize_criteria(curves->mv, curves->em);
  std::cout << "mv_avg " << fixed(c.mv_avg, 6) << " em_avg " << fixed(c.em_avg, 6) << '\n';
  if (!curves_out.empty()) {
    std::ofstream out(curves_out);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + curves_out);
    out << "curve,x,y\n";
    for (const auto& p : curves->mv) out << "mv," << format_real(p.x) << ',' << format_real(p.y) << '\n';
    for (const auto& p : curves->em) out << "em," << format_real(p.x) << ',' << format_real(p.y) << '\n';
    std::cout << "curves written to " << curves_out << '\n';
  }
  return 0;
}

int cmd_bench(BenchConfig cfg, const fs::path& out_dir) {
  const BenchReport r = run_benchmark(cfg);
  write_report(r, out_dir);
  for (const auto& a : r.auc) {
    if (a.status == "missing") continue;
    const auto* f = r.find_forecast(a.dataset, a.freq);
    std::printf("%-38s %-7s auc %-9s retunes %zu  mdape %s%%  rmse %s  [%s]\n", a.dataset.c_str(),
                std::string(to_string(a.freq)).c_str(), fixed(a.auc, 5).c_str(), a.retune_count,
                f ? fixed(f->mdape, 3).c_str() : "-", f ? fixed(f->rmse, 3).c_str() : "-", a.status.c_str());
  }
  if (!r.missing.empty()) {
    std::cout << "missing inputs:";
    for (const auto& m : r.missing) std::cout << ' ' << m;
    std::cout << '\n';
  }
  if (!r.runtime.empty()) {
    std::cout << "runtime on " << r.hardware << " (1 thread):\n";
    for (const auto& t : r.runtime)
      std::printf("  length %zu, %zu triggers: %.3f s\n", t.length, t.triggers, t.seconds);
  }
  std::cout << "combined auc " << fixed(r.combined_auc, 5) << "; report in " << out_dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autoad: self-evaluating time-series anomaly detection"};
  app.require_subcommand(1);
  std::string data_dir = "autoad-data";

  auto* reg = app.add_subcommand("register", "register a job from a JSON spec");
  std::string spec_path;
  reg->add_option("--spec", spec_path, "job spec JSON")->required();
  reg->add_option("--data-dir", data_dir, "state directory");

  auto* run = app.add_subcommand("run", "advance the simulated clock");
  Tick until = 0;
  run->add_option("--until", until, "target tick")->required();
  run->add_option("--data-dir", data_dir, "state directory");

  auto* status = app.add_subcommand("status", "print the G/Y/R table");
  status->add_option("--data-dir", data_dir, "state directory");

  auto* eval = app.add_subcommand("eval", "MV/EM evaluation of one metric");
  std::string metric, curves_out;
  eval->add_option("--metric", metric, "metric id")->required();
  eval->add_option("--emit-curves", curves_out, "CSV file for the MV and EM curves");
  eval->add_option("--data-dir", data_dir, "state directory");

  auto* bench = app.add_subcommand("bench", "NAB benchmark harness");
  std::string nab_dir, datasets, freq = "both", agg = "mean", out_dir = "report";
  bool runtime = false, no_fixtures = false;
  std::uint64_t seed = 0;
  std::size_t budget = 30;
  bench->add_option("--nab-dir", nab_dir, "NAB checkout with data/ and labels/");
  bench->add_option("--datasets", datasets, "comma-separated dataset names (default: the six comparison series)");
  bench->add_option("--freq", freq, "hourly, daily or both")->check(CLI::IsMember({"hourly", "daily", "both"}));
  bench->add_option("--agg", agg, "aggregation statistic")->check(CLI::IsMember({"mean", "sum"}));
  bench->add_option("--out", out_dir, "report directory");
  bench->add_option("--seed", seed, "seed for tuning");
  bench->add_option("--tune-budget", budget, "trials per tuning run");
  bench->add_flag("--runtime", runtime, "also time training with 0-3 optimization triggers");
  bench->add_flag("--no-fixtures", no_fixtures, "skip the synthetic fixture rows");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*reg) return cmd_register(spec_path, data_dir);
    if (*run) return cmd_run(until, data_dir);
    if (*status) return cmd_status(data_dir);
    if (*eval) return cmd_eval(metric, curves_out, data_dir);
    if (*bench) {
      BenchConfig cfg;
      if (!nab_dir.empty()) cfg.nab_dir = nab_dir;
      if (!datasets.empty()) cfg.datasets = split_list(datasets);
      if (freq != "both") cfg.freqs = {frequency_from_string(freq)};
      cfg.agg = agg == "sum" ? AggregateKind::sum : AggregateKind::mean;
      cfg.fixtures = !no_fixtures;
      cfg.runtime = runtime;
      cfg.seed = seed;
      cfg.tune_budget = budget;
      return cmd_bench(cfg, out_dir);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
