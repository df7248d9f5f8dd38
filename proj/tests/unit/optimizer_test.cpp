#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "autoad/cost.hpp"
#include "autoad/detail/rng.hpp"
#include "autoad/injection.hpp"
#include "autoad/tpe.hpp"

using namespace autoad;

namespace {

TimeSeries hourly(std::vector<double> v) { return TimeSeries::from_values(std::move(v)); }

std::vector<double> seasonal_ar(std::size_t n, std::uint64_t seed) {
  detail::Rng rng(seed);
  std::vector<double> v(n);
  double e = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    e = 0.7 * e + rng.normal();
    v[t] = 20.0 + 3.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0) + e;
  }
  return v;
}

ModelConfig filtering_config() {
  ModelConfig c;
  c.method = Method::filtering;
  return c;
}

}  // namespace

TEST(Injection, EmptyInjection) {
  const auto x = hourly(seasonal_ar(100, 1));
  const auto l = inject_synthetic_anomalies(x, 0.0, {3.0}, 5);
  EXPECT_EQ(l.series, x);
  EXPECT_TRUE(l.injected.empty());
  EXPECT_EQ(std::count(l.labels.begin(), l.labels.end(), 1), 0);
}

TEST(Injection, ConstantSeriesStillPerturbed) {
  const auto l = inject_synthetic_anomalies(hourly(std::vector<double>(200, 10.0)), 0.05, {3.0, 5.0}, 9);
  ASSERT_EQ(l.injected.size(), 10u);
  for (const auto& p : l.injected) EXPECT_NE(l.series[p.index], 10.0);
}

TEST(Injection, CountLabelsAndDeterminism) {
  const auto x = hourly(seasonal_ar(1000, 2));
  const std::vector<double> scales{3.0, 5.0, 8.0};
  const auto a = inject_synthetic_anomalies(x, 0.02, scales, 77);
  const auto b = inject_synthetic_anomalies(x, 0.02, scales, 77);
  ASSERT_EQ(a.injected.size(), 20u);
  EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), 1), 20);
  EXPECT_EQ(a.series, b.series);
  EXPECT_EQ(a.injected, b.injected);
  const double unit = injection_unit(x.values());
  std::set<std::size_t> idx;
  for (const auto& p : a.injected) {
    idx.insert(p.index);
    EXPECT_GE(p.index, kInjectionWarmup);
    EXPECT_TRUE(std::find(scales.begin(), scales.end(), std::abs(p.scale)) != scales.end());
    EXPECT_NEAR(a.series[p.index] - x[p.index], p.scale * unit, 1e-9);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(a.labels[i], idx.count(i) ? 1 : 0);
    if (!idx.count(i)) EXPECT_EQ(a.series[i], x[i]);
  }
  const auto c = inject_synthetic_anomalies(x, 0.02, scales, 78);
  EXPECT_NE(a.injected, c.injected);
}

TEST(Injection, RateTooHigh) {
  try {
    inject_synthetic_anomalies(hourly(seasonal_ar(100, 1)), 0.2, {3.0}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RateTooHigh);
  }
}

TEST(CrossEntropy, ConstantHalfIsLn2) {
  const std::vector<double> p(37, 0.5);
  std::vector<int> y(37, 0);
  for (std::size_t i = 0; i < y.size(); i += 3) y[i] = 1;
  EXPECT_NEAR(cross_entropy(p, y), std::numbers::ln2, 1e-12);
}

TEST(CrossEntropy, PerfectScorerNearZero) {
  const std::vector<int> y{0, 1, 0, 0, 1};
  const std::vector<double> p{0.0, 1.0, 0.0, 0.0, 1.0};
  const double ce = cross_entropy(p, y);
  EXPECT_GE(ce, 0.0);
  EXPECT_NEAR(ce, -std::log1p(-1e-6), 1e-12);
}

TEST(CrossEntropy, Errors) {
  EXPECT_THROW(cross_entropy(std::vector<double>{0.5}, std::vector<int>{0, 1}), Error);
  EXPECT_THROW(cross_entropy(std::vector<double>{}, std::vector<int>{}), Error);
}

TEST(Mape, FlooredDenominator) {
  EXPECT_NEAR(mean_absolute_percentage_error(std::vector<double>{1.1, 2.2}, std::vector<double>{1.0, 2.0}, 1e-9), 0.1,
              1e-12);
  EXPECT_NEAR(mean_absolute_percentage_error(std::vector<double>{1.0}, std::vector<double>{0.0}, 0.5), 2.0, 1e-12);
}

TEST(Cost, FilteringIgnoresAlpha) {
  const auto l = inject_synthetic_anomalies(hourly(seasonal_ar(400, 3)), 0.05, {3.0, 5.0, 8.0}, 4);
  const auto c0 = cost_breakdown(filtering_config(), l, 0.0);
  ASSERT_TRUE(std::isfinite(c0.cost));
  for (double a : {0.0, 0.5, 1.0}) {
    const auto c = cost_breakdown(filtering_config(), l, a);
    EXPECT_EQ(c.cost, c0.cost);
    EXPECT_EQ(c.cost, c.ce);
  }
}

TEST(Cost, StructuralIsConvexCombination) {
  const auto l = inject_synthetic_anomalies(hourly(seasonal_ar(400, 3)), 0.05, {3.0, 5.0, 8.0}, 4);
  ModelConfig c;
  c.structural.p = 1;
  for (double a : {0.0, 0.3, 1.0}) {
    const auto b = cost_breakdown(c, l, a);
    ASSERT_TRUE(std::isfinite(b.cost));
    EXPECT_NEAR(b.cost, a * b.ce + (1.0 - a) * b.mape, 1e-12);
  }
  EXPECT_EQ(cost(c, l, 0.5), cost(c, l, 0.5));
}

TEST(Cost, InvalidConfigurationIsInfinite) {
  const auto l = inject_synthetic_anomalies(hourly(seasonal_ar(60, 3)), 0.05, {3.0}, 4);
  ModelConfig c;
  c.structural.p = 3;
  c.structural.q = 3;
  EXPECT_TRUE(std::isinf(cost(c, l, 0.5)));
  EXPECT_THROW(cost(c, l, 1.5), Error);
}

TEST(Tune, StartupOnlyEqualsRandomSearch) {
  const auto x = hourly(seasonal_ar(300, 5));
  const auto t = tune(x, 10, 0.5, 11);
  const auto r = random_search(x, 10, 0.5, 11);
  ASSERT_EQ(t.trials.size(), 10u);
  ASSERT_EQ(r.trials.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_TRUE(t.trials[i].config == r.trials[i].config);
    EXPECT_EQ(t.trials[i].cost, r.trials[i].cost);
  }
  EXPECT_EQ(t.best_cost, r.best_cost);
}

TEST(Tune, HistoryInvariantsAndDeterminism) {
  const auto x = hourly(seasonal_ar(300, 6));
  const auto a = tune(x, 25, 0.5, 3);
  const auto b = tune(x, 25, 0.5, 3);
  ASSERT_EQ(a.trials.size(), 25u);
  double best = INFINITY;
  for (const auto& tr : a.trials) best = std::min(best, tr.cost);
  EXPECT_EQ(a.best_cost, best);
  EXPECT_TRUE(std::isfinite(a.best_cost));
  EXPECT_EQ(a.seed, 3u);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_TRUE(a.trials[i].config == b.trials[i].config);
    EXPECT_EQ(a.trials[i].cost, b.trials[i].cost);
  }
  EXPECT_THROW(tune(x, 9, 0.5, 3), Error);
}

TEST(Tune, WhiteNoisePrefersFiltering) {
  // Zero-mean noise: the percentage error term penalizes structural fits.
  int filtering = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    detail::Rng rng(500 + seed);
    std::vector<double> v(400);
    for (auto& y : v) y = rng.normal();
    filtering += tune(hourly(v), 30, 0.5, seed).best_config.method == Method::filtering;
  }
  EXPECT_GE(filtering, 8);
}
