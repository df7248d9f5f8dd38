#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "autoad/changepoint.hpp"
#include "autoad/detail/rng.hpp"
#include "autoad/profiling.hpp"
#include "autoad/spectrum.hpp"

using namespace autoad;

namespace {

TimeSeries hourly(std::vector<double> v) { return TimeSeries::from_values(std::move(v)); }

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  detail::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double sine(std::size_t t, double period) {
  return std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
}

// n * log(sample variance) of a constant-mean Gaussian segment.
double gaussian_cost(const std::vector<double>& y, std::size_t a, std::size_t b) {
  double m = 0.0;
  for (std::size_t i = a; i < b; ++i) m += y[i];
  m /= static_cast<double>(b - a);
  double ss = 0.0;
  for (std::size_t i = a; i < b; ++i) ss += (y[i] - m) * (y[i] - m);
  return static_cast<double>(b - a) * std::log(ss / static_cast<double>(b - a));
}

std::size_t best_single_split(const std::vector<double>& y, std::size_t min_segment) {
  std::size_t best = 0;
  double best_cost = INFINITY;
  for (std::size_t k = min_segment; k + min_segment <= y.size(); ++k) {
    const double c = gaussian_cost(y, 0, k) + gaussian_cost(y, k, y.size());
    if (c < best_cost) best_cost = c, best = k;
  }
  return best;
}

double frequency_bin(std::size_t n) { return 1.0 / static_cast<double>(n); }

}  // namespace

TEST(ChangePoints, ConstantSeriesHasNone) {
  EXPECT_TRUE(detect_change_points(hourly(std::vector<double>(200, 3.0)), default_change_penalty(200), 10).empty());
}

TEST(ChangePoints, SingleMeanShiftMatchesExhaustiveScan) {
  auto v = white_noise(200, 11);
  for (std::size_t i = 100; i < 200; ++i) v[i] += 10.0;
  const auto cps = detect_change_points(hourly(v), 3.0 * std::log(200.0), 5);
  ASSERT_EQ(cps.size(), 1u);
  const std::size_t oracle = best_single_split(v, 5);
  EXPECT_NEAR(static_cast<double>(oracle), 100.0, 2.0);
  EXPECT_NEAR(static_cast<double>(cps[0]), static_cast<double>(oracle), 2.0);
}

TEST(ChangePoints, PureTrendHasNone) {
  std::vector<double> v(300);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = 0.5 * static_cast<double>(t);
  EXPECT_TRUE(detect_change_points(hourly(v), default_change_penalty(300), 10).empty());
  auto noisy = white_noise(300, 5);
  for (std::size_t t = 0; t < noisy.size(); ++t) noisy[t] += 0.05 * static_cast<double>(t);
  EXPECT_TRUE(detect_change_points(hourly(noisy), default_change_penalty(300), 10).empty());
}

TEST(ChangePoints, InvariantsAndMonotoneInPenalty) {
  auto v = white_noise(400, 21);
  for (std::size_t i = 120; i < 260; ++i) v[i] += 3.0;
  for (std::size_t i = 260; i < 400; ++i) v[i] *= 3.0;
  std::size_t prev = SIZE_MAX;
  for (double pen : {0.0, 2.0, 5.0, 18.0, 50.0, 200.0}) {
    const auto cps = detect_change_points(hourly(v), pen, 10);
    EXPECT_LE(cps.size(), prev);
    prev = cps.size();
    for (std::size_t i = 0; i < cps.size(); ++i) {
      EXPECT_GE(cps[i], 10u);
      EXPECT_LE(cps[i], 390u);
      if (i > 0) EXPECT_GE(cps[i] - cps[i - 1], 10u);
    }
  }
}

TEST(ChangePoints, Errors) {
  try {
    detect_change_points(hourly(std::vector<double>(15, 1.0)), 1.0, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SeriesTooShort);
  }
}

TEST(TrendChanges, ConstantAndMonotoneHaveNone) {
  EXPECT_TRUE(detect_trend_changes(hourly(std::vector<double>(200, 1.0)), 20, 4.0).empty());
  std::vector<double> line(200);
  for (std::size_t t = 0; t < line.size(); ++t) line[t] = 2.0 * static_cast<double>(t) - 5.0;
  EXPECT_TRUE(detect_trend_changes(hourly(line), 20, 4.0).empty());
}

TEST(TrendChanges, VertexFound) {
  const std::size_t vertex = 150, window = 20;
  auto v = white_noise(300, 9);
  for (std::size_t t = 0; t < v.size(); ++t)
    v[t] += 0.2 * std::abs(static_cast<double>(t) - static_cast<double>(vertex));
  const auto tc = detect_trend_changes(hourly(v), window, 4.0);
  ASSERT_EQ(tc.size(), 1u);
  EXPECT_NEAR(static_cast<double>(tc[0]), static_cast<double>(vertex), static_cast<double>(window));
}

TEST(Stationarize, WhiteNoiseUnchanged) {
  const auto v = white_noise(300, 1);
  const auto st = stationarize(hourly(v));
  EXPECT_EQ(st.d, 0);
  EXPECT_EQ(st.series, hourly(v));
}

TEST(Stationarize, RandomWalkRecoversIncrements) {
  const auto e = white_noise(400, 2);
  std::vector<double> walk(e.size());
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) walk[i] = s += e[i];
  const auto st = stationarize(hourly(walk));
  ASSERT_EQ(st.d, 1);
  ASSERT_EQ(st.series.size(), e.size() - 1);
  for (std::size_t i = 0; i < st.series.size(); ++i) EXPECT_NEAR(st.series[i], e[i + 1], 1e-9);
}

TEST(Stationarize, RampBecomesConstant) {
  std::vector<double> v(100);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = static_cast<double>(t);
  const auto st = stationarize(hourly(v));
  EXPECT_EQ(st.d, 1);
  for (std::size_t i = 0; i < st.series.size(); ++i) EXPECT_DOUBLE_EQ(st.series[i], 1.0);
}

TEST(Stationarize, Idempotent) {
  const auto e = white_noise(400, 3);
  std::vector<double> walk(e.size());
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) walk[i] = s += e[i];
  for (const auto& x : {hourly(e), hourly(walk)}) {
    const auto once = stationarize(x);
    EXPECT_EQ(stationarize(once.series).d, 0);
  }
}

TEST(Stationarize, SeasonalSeriesNotDifferenced) {
  auto v = white_noise(480, 4);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] += 10.0 + 5.0 * sine(t, 24.0);
  EXPECT_EQ(stationarize(hourly(v)).d, 0);
}

TEST(Fourier, SingleSinusoid) {
  const std::size_t n = 480;
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) v[t] = sine(t, 24.0);
  const auto f = select_fourier_frequencies(hourly(v), 3);
  ASSERT_FALSE(f.empty());
  EXPECT_NEAR(f[0].frequency, 1.0 / 24.0, frequency_bin(n));
}

TEST(Fourier, WhiteNoiseYieldsNothing) {
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    EXPECT_TRUE(select_fourier_frequencies(hourly(white_noise(480, 100 + seed)), 5, 10.0).empty()) << seed;
}

TEST(Fourier, TwoTones) {
  const std::size_t n = 1680;
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) v[t] = sine(t, 24.0) + 0.8 * sine(t, 168.0);
  const auto f = select_fourier_frequencies(hourly(v), 3);
  ASSERT_GE(f.size(), 2u);
  std::vector<double> top{f[0].frequency, f[1].frequency};
  std::sort(top.begin(), top.end());
  EXPECT_NEAR(top[0], 1.0 / 168.0, frequency_bin(n));
  EXPECT_NEAR(top[1], 1.0 / 24.0, frequency_bin(n));
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_GE(f[i].power, 0.0);
    if (i > 0) EXPECT_GE(f[i - 1].power, f[i].power);
  }
}

TEST(Fourier, PeriodogramMatchesDirectDft) {
  // A tone sitting exactly on bin n/12 dominates; result index 0 is bin 1.
  const std::size_t n = 96;
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) v[t] = sine(t, 12.0);
  const auto p = periodogram(v);
  ASSERT_EQ(p.size(), n / 2);
  std::size_t arg = 0;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k] > p[arg]) arg = k;
  EXPECT_EQ(arg + 1, n / 12);
}

TEST(Profile, ConstantPositiveSeries) {
  const auto p = profile(hourly(std::vector<double>(200, 5.0)));
  EXPECT_TRUE(p.change_points.empty());
  EXPECT_EQ(p.diff_order, 0);
  EXPECT_FALSE(p.log_recommended);
  EXPECT_TRUE(p.fourier_terms.empty());
  EXPECT_EQ(p.missing_fraction, 0.0);
}

TEST(Profile, LognormalRecommendsLog) {
  // sigma = 0.835 gives population skewness (e^{s^2} + 2) sqrt(e^{s^2} - 1) close to 4.
  detail::Rng rng(8);
  std::vector<double> v(3000);
  for (auto& x : v) x = std::exp(0.835 * rng.normal());
  double m = 0.0, m2 = 0.0, m3 = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double x : v) m2 += (x - m) * (x - m), m3 += (x - m) * (x - m) * (x - m);
  m2 /= static_cast<double>(v.size());
  m3 /= static_cast<double>(v.size());
  const double oracle = m3 / std::pow(m2, 1.5);
  ASSERT_GT(oracle, 1.5);
  const auto p = profile(hourly(v));
  EXPECT_NEAR(p.skewness, oracle, 1e-9);
  EXPECT_TRUE(p.log_recommended);
}

TEST(Profile, SinusoidWithLevelShift) {
  const std::size_t n = 480;
  auto v = white_noise(n, 6);
  for (std::size_t t = 0; t < n; ++t) v[t] = 10.0 + 0.3 * v[t] + sine(t, 24.0) + (t >= n / 2 ? 8.0 : 0.0);
  const auto p = profile(hourly(v));
  ASSERT_EQ(p.change_points.size(), 1u);
  EXPECT_NEAR(static_cast<double>(p.change_points[0]), n / 2.0, 2.0);
  bool daily = false;
  for (const auto& f : p.fourier_terms) daily = daily || std::abs(f.frequency - 1.0 / 24.0) <= frequency_bin(n);
  EXPECT_TRUE(daily);
}

TEST(Profile, Deterministic) {
  auto v = white_noise(300, 12);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] += sine(t, 24.0);
  v[17] = kMissing;
  const auto a = profile(hourly(v));
  const auto b = profile(hourly(v));
  EXPECT_EQ(a.change_points, b.change_points);
  EXPECT_EQ(a.fourier_terms, b.fourier_terms);
  EXPECT_EQ(a.diff_order, b.diff_order);
  EXPECT_NEAR(a.missing_fraction, 1.0 / 300.0, 1e-15);
}
