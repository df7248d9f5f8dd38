// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
// Exit status: 0 when nothing failed, 1 on failure, 77 when every selected
// criterion was skipped and --require-nab was given.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "autoad/autoad.hpp"

namespace fs = std::filesystem;
using namespace autoad;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double sine(std::size_t t, double period) {
  return std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
}

// ---- 1 -----------------------------------------------------------------------

Outcome kalman_equivalence() {
  const auto t0 = Clock::now();
  detail::Rng rng(1);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const int dim = c < 50 ? 1 : 2;
    const double q = std::exp(rng.uniform(-5.0, 1.0)), r = std::exp(rng.uniform(-2.0, 2.0));
    StateSpaceModel m = make_state_space(dim, q, r);
    // Direct recursion on plain arrays: x <- C x, P <- C P C' + Q, gain on the first component.
    double x[2] = {rng.normal(), dim == 2 ? 0.1 * rng.normal() : 0.0};
    double P[2][2] = {{std::exp(rng.uniform(-1.0, 2.0)), 0.0}, {0.0, dim == 2 ? std::exp(rng.uniform(-1.0, 1.0)) : 0.0}};
    const double Q[2] = {q, dim == 2 ? 0.01 * q : 0.0};
    for (int i = 0; i < dim; ++i) {
      m.x0(i) = x[i];
      for (int j = 0; j < dim; ++j) m.P0(i, j) = P[i][j];
    }
    FilterState s = initial_filter_state(m);
    for (int t = 0; t < 500; ++t) {
      const double y = std::sin(0.05 * t) + rng.normal();
      s = kalman_step(m, s, y);
      double xp[2], Pp[2][2];
      if (dim == 1) {
        xp[0] = x[0];
        Pp[0][0] = P[0][0] + Q[0];
      } else {
        xp[0] = x[0] + x[1];
        xp[1] = x[1];
        Pp[0][0] = P[0][0] + P[0][1] + P[1][0] + P[1][1] + Q[0];
        Pp[0][1] = P[0][1] + P[1][1];
        Pp[1][0] = P[1][0] + P[1][1];
        Pp[1][1] = P[1][1] + Q[1];
      }
      const double S = Pp[0][0] + r;
      const double innov = y - xp[0];
      double K[2];
      for (int i = 0; i < dim; ++i) K[i] = Pp[i][0] / S;
      for (int i = 0; i < dim; ++i) x[i] = xp[i] + K[i] * innov;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) P[i][j] = Pp[i][j] - K[i] * Pp[0][j];
      if (dim == 2) P[0][1] = P[1][0] = 0.5 * (P[0][1] + P[1][0]);
      for (int i = 0; i < dim; ++i) {
        worst = std::max(worst, std::abs(s.x_post(i) - x[i]));
        for (int j = 0; j < dim; ++j) worst = std::max(worst, std::abs(s.P_post(i, j) - P[i][j]));
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= 1e-10 && secs < 5.0;
  return {ok ? Status::pass : Status::fail, fmt("max abs diff %.3g over 100 configs x 500 steps, %.2f s", worst, secs)};
}

// ---- 2 -----------------------------------------------------------------------

Outcome arma_recovery() {
  const auto t0 = Clock::now();
  ModelConfig ar, arma;
  ar.structural = {1, 0, 0};
  arma.structural = {1, 1, 0};
  detail::Rng r1(2024), r2(2025);
  std::vector<double> a(2000), b(2000);
  double x = 0.0;
  for (auto& y : a) y = x = 0.7 * x + r1.normal();
  x = 0.0;
  double e_prev = 0.0;
  for (auto& y : b) {
    const double e = r2.normal();
    y = x = 0.5 * x + e + 0.3 * e_prev;
    e_prev = e;
  }
  const auto ma = fit_structural(TimeSeries::from_values(a), DataProfile{}, ar);
  const auto mb = fit_structural(TimeSeries::from_values(b), DataProfile{}, arma);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(ma.phi[0] - 0.7) <= 0.05 && std::abs(ma.sigma2 - 1.0) <= 0.15 &&
                  std::abs(mb.phi[0] - 0.5) <= 0.05 && std::abs(mb.omega[0] - 0.3) <= 0.05 &&
                  std::abs(mb.sigma2 - 1.0) <= 0.15 && secs < 30.0;
  return {ok ? Status::pass : Status::fail,
          fmt("AR(1) phi %.4f sigma2 %.4f; ARMA(1,1) phi %.4f omega %.4f sigma2 %.4f; %.2f s", ma.phi[0], ma.sigma2,
              mb.phi[0], mb.omega[0], mb.sigma2, secs)};
}

// ---- 3 -----------------------------------------------------------------------

Outcome fourier_selection() {
  const std::size_t n = 480;
  int hits = 0;
  std::string freqs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    detail::Rng rng(300 + seed);
    std::vector<double> v(n);
    for (std::size_t t = 0; t < n; ++t) v[t] = sine(t, 24.0) + std::sqrt(0.1) * rng.normal();
    const auto f = select_fourier_frequencies(TimeSeries::from_values(v), 3);
    const bool hit = !f.empty() && std::abs(f[0].frequency - 1.0 / 24.0) <= 1.0 / static_cast<double>(n);
    hits += hit;
    freqs += fmt(" %.4f", f.empty() ? 0.0 : f[0].frequency);
  }
  return {hits == 10 ? Status::pass : Status::fail, fmt("%d/10 seeds within one bin of 1/24; top:", hits) + freqs};
}

// ---- 4 -----------------------------------------------------------------------

Outcome cost_contract() {
  std::vector<double> half(1000, 0.5);
  std::vector<int> labels(1000, 0);
  for (std::size_t i = 0; i < labels.size(); i += 7) labels[i] = 1;
  const double ce = cross_entropy(half, labels);
  const double ce_err = std::abs(ce - std::numbers::ln2);

  detail::Rng rng(4);
  std::vector<double> v(500);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = 10.0 + sine(t, 24.0) + 0.3 * rng.normal();
  const auto l = inject_synthetic_anomalies(TimeSeries::from_values(v), 0.05, {3.0, 5.0, 8.0}, 4);
  bool independent = true;
  std::string costs;
  for (int dim : {1, 2}) {
    ModelConfig c;
    c.method = Method::filtering;
    c.filtering.state_dim = dim;
    const double base = cost(c, l, 0.0);
    for (double alpha : {0.0, 0.5, 1.0}) {
      const auto b = cost_breakdown(c, l, alpha);
      independent = independent && std::isfinite(b.cost) && b.cost == base && b.cost == b.ce;
      costs += fmt(" %.6f", b.cost);
    }
  }
  const bool ok = ce_err <= 1e-12 && independent;
  return {ok ? Status::pass : Status::fail,
          fmt("|CE - ln2| = %.2g; filtering cost over alpha {0,0.5,1}:", ce_err) + costs};
}

// ---- 5 -----------------------------------------------------------------------

TimeSeries tuning_task(std::uint64_t seed) {
  detail::Rng rng(seed);
  std::vector<double> v(600);
  double e = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    e = 0.7 * e + rng.normal();
    v[t] = 20.0 + 3.0 * sine(t, 24.0) + e;
  }
  return TimeSeries::from_values(std::move(v));
}

Outcome tpe_efficacy() {
  const auto t0 = Clock::now();
  int wins = 0;
  std::string pairs;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto ts = tuning_task(1000 + s);
    const auto a = tune(ts, 50, 0.5, s);
    const auto b = random_search(ts, 50, 0.5, s);
    wins += a.best_cost <= b.best_cost;
    pairs += fmt(" %.4f/%.4f", a.best_cost, b.best_cost);
  }
  const double secs = seconds_since(t0);
  const bool ok = wins >= 7 && secs < 300.0;
  return {ok ? Status::pass : Status::fail, fmt("TPE <= random in %d/10 (tpe/random:", wins) + pairs + fmt("), %.1f s", secs)};
}

// ---- 6 -----------------------------------------------------------------------

Outcome mv_em_analytics() {
  auto ind = [](double x) { return x >= 0.0 && x <= 0.3 ? 1.0 : 0.0; };
  const std::size_t n_mc = 10000;
  const double se = std::sqrt(0.3 * 0.7 / static_cast<double>(n_mc));
  bool values_ok = true, monotone = true;
  double worst_mv = 0.0, worst_em = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    detail::Rng rng(600 + seed);
    std::vector<double> sample(1000);
    for (auto& s : sample) s = ind(rng.uniform(0.0, 0.3));
    const std::vector<double> a02{0.2}, t1{1.0};
    const double mv = mv_curve(ind, sample, a02, Domain{0.0, 1.0}, n_mc, seed)[0].y;
    const double em = em_curve(ind, sample, t1, Domain{0.0, 1.0}, n_mc, seed)[0].y;
    worst_mv = std::max(worst_mv, std::abs(mv - 0.3));
    worst_em = std::max(worst_em, std::abs(em - 0.7));
    values_ok = values_ok && std::abs(mv - 0.3) <= 3.0 * se && std::abs(em - 0.7) <= 3.0 * se;

    // Monotonicity on a non-trivial scorer with a continuous sample.
    std::vector<double> xs(500), scores;
    for (auto& x : xs) x = rng.normal();
    auto g = [](double x) { return std::exp(-0.5 * x * x); };
    for (double x : xs) scores.push_back(g(x));
    const Domain dom{-5.0, 5.0};
    const auto mvc = mv_curve(g, scores, alpha_grid(), dom, n_mc, seed);
    const auto emc = em_curve(g, scores, t_grid(scores, dom), dom, n_mc, seed);
    for (std::size_t i = 1; i < mvc.size(); ++i) monotone = monotone && mvc[i].y >= mvc[i - 1].y;
    for (std::size_t i = 1; i < emc.size(); ++i) monotone = monotone && emc[i].y <= emc[i - 1].y;
  }
  const bool ok = values_ok && monotone;
  return {ok ? Status::pass : Status::fail,
          fmt("max |MV(0.2)-0.3| %.4f, max |EM(1)-0.7| %.4f (3 SE = %.4f) over 10 runs; monotone: %s", worst_mv,
              worst_em, 3.0 * se, monotone ? "yes" : "no")};
}

// ---- 7 -----------------------------------------------------------------------

Outcome dominance_ordering() {
  // Both scorers rank by distance from a center; the better one is centered
  // on the data, so its level sets are the minimum-volume sets at every mass.
  auto better = [](double x) { return std::exp(-0.5 * x * x); };
  auto worse = [](double x) { return std::exp(-0.5 * (x - 1.0) * (x - 1.0)); };
  const Domain dom{-6.0, 6.0};
  int ordered = 0;
  std::string rows;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    detail::Rng rng(700 + seed);
    std::vector<double> xs(2000), sb, sw;
    for (auto& x : xs) x = rng.normal();
    for (double x : xs) sb.push_back(better(x)), sw.push_back(worse(x));
    const std::vector<double> ts = t_grid(sb, dom);
    const auto a = summarize_criteria(mv_curve(better, sb, alpha_grid(), dom, 10000, seed),
                                      em_curve(better, sb, ts, dom, 10000, seed));
    const auto b = summarize_criteria(mv_curve(worse, sw, alpha_grid(), dom, 10000, seed),
                                      em_curve(worse, sw, ts, dom, 10000, seed));
    ordered += a.mv_avg < b.mv_avg && a.em_avg > b.em_avg;
    if (seed == 0) rows = fmt("seed 0: mv %.3f vs %.3f, em %.4f vs %.4f", a.mv_avg, b.mv_avg, a.em_avg, b.em_avg);
  }
  return {ordered == 10 ? Status::pass : Status::fail, fmt("%d/10 seeds ordered; ", ordered) + rows};
}

// ---- 8 -----------------------------------------------------------------------

struct LoopRun {
  std::size_t retunes = 0;
  std::optional<Health> at_shift;
  std::optional<Tick> first_red_after_shift;
  std::vector<std::pair<Tick, Health>> history;
};

LoopRun self_awareness_run(bool shifted, std::uint64_t seed) {
  detail::Rng rng(seed);
  std::vector<double> v(600);
  for (std::size_t t = 0; t < v.size(); ++t) {
    v[t] = 20.0 + 2.0 * sine(t, 24.0) + rng.normal();
    if (shifted && t >= 300) v[t] *= 3.0;
  }
  JobSpec spec;
  spec.job_id = "loop";
  spec.metric_id = "loop";
  spec.values = v;
  spec.seed = seed;
  spec.channels.clear();
  Orchestrator o;
  o.register_job(spec);
  o.advance_clock(v.size());
  LoopRun r;
  r.retunes = o.retune_count("loop");
  r.history = o.health_history("loop");
  for (const auto& [tick, h] : r.history) {
    if (tick == 300) r.at_shift = h;
    if (tick > 300 && h == Health::R && !r.first_red_after_shift) r.first_red_after_shift = tick;
  }
  return r;
}

Outcome self_awareness_loop() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string rows;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = self_awareness_run(true, seed);
    const auto again = self_awareness_run(true, seed);
    const auto c = self_awareness_run(false, seed);
    // Observation 300 is first scored at tick 301, so 48 post-shift scores end at tick 348.
    const bool shift_ok = s.at_shift == Health::G && s.first_red_after_shift && *s.first_red_after_shift <= 348 &&
                          s.retunes >= 1;
    const bool deterministic = s.history == again.history && s.retunes == again.retunes;
    ok = ok && shift_ok && deterministic && c.retunes <= 1;
    rows += fmt(" [seed %llu: G at shift %s, first R tick %lld, retunes %zu, control retunes %zu%s]",
                static_cast<unsigned long long>(seed), s.at_shift == Health::G ? "yes" : "no",
                s.first_red_after_shift ? static_cast<long long>(*s.first_red_after_shift) : -1LL, s.retunes,
                c.retunes, deterministic ? "" : ", NOT deterministic");
  }
  return {ok ? Status::pass : Status::fail, fmt("%.1f s;", seconds_since(t0)) + rows};
}

// ---- 9, 10 -------------------------------------------------------------------

std::optional<fs::path> nab_dir_from(const std::string& flag) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("AUTOAD_NAB_DIR"); env && *env) return fs::path(env);
  return std::nullopt;
}

std::string nab_missing_reason(const std::optional<fs::path>& dir, const std::vector<std::string>& names) {
  if (!dir) return "NAB data not available (set AUTOAD_NAB_DIR or --nab-dir)";
  if (!fs::exists(nab_windows_path(*dir))) return "missing " + nab_windows_path(*dir).string();
  for (const auto& n : names)
    if (!find_nab_file(*dir, n)) return "missing " + n + ".csv under " + (*dir / "data").string();
  return {};
}

Outcome nab_auc(const std::optional<fs::path>& dir) {
  const auto names = nab_datasets();
  if (auto why = nab_missing_reason(dir, names); !why.empty()) return {Status::skip, why};
  const auto t0 = Clock::now();
  BenchConfig cfg;
  cfg.nab_dir = *dir;
  cfg.fixtures = false;
  const auto rep = run_benchmark(cfg);
  const double secs = seconds_since(t0);
  const auto* mt = rep.find_auc("machine_temperature_system_failure", Frequency::hourly);
  const auto* crm = rep.find_auc("Twitter_volume_CRM", Frequency::daily);
  const double mt_auc = mt ? mt->auc : NAN, crm_auc = crm ? crm->auc : NAN;
  const bool primary = mt_auc >= 0.90 && crm_auc >= 0.65;
  bool all_above = true;
  for (const auto& r : rep.auc) all_above = all_above && r.status == "ok" && r.auc > 0.5;
  // The constant-score baseline has AUC 0.5; the pooled curve dominates it when its area exceeds 0.5.
  const bool dominates = rep.combined_auc > 0.5;
  const bool ok = (primary || (all_above && dominates)) && secs < 600.0 * 12;
  std::string detail = fmt("machine_temperature hourly %.5f (reference 0.99623), Twitter_volume_CRM daily %.5f "
                           "(reference 0.75267); combined %.5f; %s; %.1f s",
                           mt_auc, crm_auc, rep.combined_auc,
                           primary ? "thresholds met" : (all_above && dominates) ? "fallback met" : "not met", secs);
  return {ok ? Status::pass : Status::fail, detail};
}

Outcome nab_forecast(const std::optional<fs::path>& dir) {
  const std::string name = "machine_temperature_system_failure";
  if (auto why = nab_missing_reason(dir, {name}); !why.empty()) return {Status::skip, why};
  BenchConfig cfg;
  cfg.nab_dir = *dir;
  cfg.fixtures = false;
  cfg.datasets = {name};
  cfg.freqs = {Frequency::hourly};
  const auto rep = run_benchmark(cfg);
  const auto* f = rep.find_forecast(name, Frequency::hourly);
  const double mdape = f ? f->mdape : NAN;
  return {mdape <= 10.0 ? Status::pass : Status::fail,
          fmt("machine_temperature hourly MDAPE %.3f%% over %zu points (reference 3.735%%)", mdape,
              f ? f->n_points : std::size_t{0})};
}

// ---- 11 ----------------------------------------------------------------------

Outcome runtime_envelope() {
  const auto rows = measure_runtime({1000}, 3);
  const double zero = rows.at(0).seconds, three = rows.at(3).seconds;
  const auto& ref = runtime_references().at(0);
  const bool ok = zero <= 10.0 && three <= 30.0;
  return {ok ? Status::pass : Status::fail,
          fmt("length 1000: 0 triggers %.3f s (reference %.3f s), 3 triggers %.3f s (reference %.3f s); %s, 1 thread; "
              "reference hardware %s",
              zero, ref.autoad[0], three, ref.autoad[3], hardware_description().c_str(), kReferenceHardware)};
}

// ---- 12 ----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome bench_determinism(const std::string& cli) {
  const auto root = fs::temp_directory_path() / "autoad-acceptance-determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::vector<fs::path> outs{root / "a", root / "b"};
  for (const auto& out : outs) {
    const std::string cmd = "\"" + cli + "\" bench --seed 7 --out \"" + out.string() + "\" > \"" +
                            (root / (out.filename().string() + ".log")).string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {Status::fail, "command failed: " + cmd};
  }
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(outs[0])) {
    if (e.path().extension() != ".csv") continue;
    const auto other = outs[1] / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other))
      return {Status::fail, e.path().filename().string() + " differs between runs"};
    ++compared;
  }
  for (const auto& e : fs::directory_iterator(outs[1]))
    if (e.path().extension() == ".csv" && !fs::exists(outs[0] / e.path().filename()))
      return {Status::fail, e.path().filename().string() + " only produced by the second run"};
  fs::remove_all(root);
  return {compared >= 3 ? Status::pass : Status::fail, fmt("%zu report CSVs byte-identical across two runs", compared)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autoad acceptance suite"};
  std::vector<int> only;
  std::string nab_flag;
  bool require_nab = false;
  std::string cli = AUTOAD_CLI;
  app.add_option("--criterion", only, "run only these criteria");
  app.add_option("--nab-dir", nab_flag, "NAB checkout (default: $AUTOAD_NAB_DIR)");
  app.add_flag("--require-nab", require_nab, "exit 77 when the selected criteria were skipped");
  app.add_option("--cli", cli, "path to the autoad executable");
  CLI11_PARSE(app, argc, argv);
  const auto nab_dir = nab_dir_from(nab_flag);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Kalman oracle equivalence", kalman_equivalence},
      {"ARMA recovery", arma_recovery},
      {"Fourier selection", fourier_selection},
      {"cost function", cost_contract},
      {"TPE efficacy", tpe_efficacy},
      {"MV/EM analytics", mv_em_analytics},
      {"dominance ordering", dominance_ordering},
      {"self-awareness loop", self_awareness_loop},
      {"NAB AUC reproduction", [&] { return nab_auc(nab_dir); }},
      {"NAB forecasting sanity", [&] { return nab_forecast(nab_dir); }},
      {"runtime envelope", runtime_envelope},
      {"bench determinism", [&] { return bench_determinism(cli); }},
  };

  int failed = 0, skipped = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    std::printf("%s criterion %2d (%s): %s\n", tag, id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failed += o.status == Status::fail;
    skipped += o.status == Status::skip;
  }
  if (failed) return 1;
  if (require_nab && ran > 0 && skipped == ran) return 77;
  return 0;
}
