#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "autoad/csv.hpp"
#include "autoad/detail/rng.hpp"
#include "autoad/detail/stats.hpp"
#include "autoad/series.hpp"

using namespace autoad;

namespace {

TimeSeries hourly(std::vector<double> v) { return TimeSeries::from_values(std::move(v)); }

}  // namespace

TEST(TimeSeries, RejectsInconsistentFrequencyLabel) {
  EXPECT_THROW(TimeSeries(0, 60, {1.0}, Frequency::hourly), Error);
  EXPECT_EQ(TimeSeries(0, 3600, {1.0}).freq(), Frequency::hourly);
  EXPECT_EQ(TimeSeries(0, 7, {1.0}).freq(), Frequency::custom);
  EXPECT_THROW(TimeSeries(0, 3600, {}), Error);
}

TEST(Impute, LinearMidpoint) {
  const auto out = impute(hourly({2.0, kMissing, 4.0}));
  EXPECT_DOUBLE_EQ(out[1], 3.0);
  EXPECT_TRUE(out.complete());
}

TEST(Impute, CompleteSeriesUnchanged) {
  for (auto m : {ImputeMethod::linear, ImputeMethod::locf, ImputeMethod::seasonal_naive}) {
    ImputePolicy p{m, 0.5, 2};
    EXPECT_EQ(impute(hourly({5, 5, 5}), p), hourly({5, 5, 5}));
  }
}

TEST(Impute, SeasonalNaiveFillsSineGap) {
  const std::size_t n = 240;
  std::vector<double> truth(n), v(n);
  auto f = [](std::size_t t) { return std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0); };
  for (std::size_t t = 0; t < n; ++t) truth[t] = v[t] = f(t);
  for (std::size_t t = 100; t < 110; ++t) v[t] = kMissing;
  const auto out = impute(hourly(v), {ImputeMethod::seasonal_naive, 0.5, 24});
  double one_step = 0.0;
  for (std::size_t t = 1; t < 24; ++t) one_step = std::max(one_step, std::abs(f(t) - f(t - 1)));
  for (std::size_t t = 100; t < 110; ++t) EXPECT_LE(std::abs(out[t] - truth[t]), 2.0 * one_step);
}

TEST(Impute, Errors) {
  EXPECT_THROW(impute(hourly({kMissing, kMissing})), Error);
  try {
    impute(hourly({1.0, kMissing, kMissing, kMissing}), {ImputeMethod::linear, 0.5, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooManyMissing);
  }
  try {
    impute(hourly({kMissing, kMissing}), {ImputeMethod::linear, 1.0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AllMissing);
  }
}

TEST(Impute, Idempotent) {
  const auto x = hourly({1.0, kMissing, 7.0, kMissing, kMissing, 2.0});
  const auto once = impute(x, {ImputeMethod::linear, 0.6, 0});
  EXPECT_EQ(impute(once), once);
  EXPECT_EQ(once[0], 1.0);
  EXPECT_EQ(once[2], 7.0);
}

TEST(Smooth, MedianRemovesSpike) {
  EXPECT_EQ(smooth(hourly({1, 1, 9, 1, 1}), 3, SmoothKind::median), hourly({1, 1, 1, 1, 1}));
}

TEST(Smooth, WindowOneIsIdentity) {
  const auto x = hourly({3, 1, 4, 1, 5});
  EXPECT_EQ(smooth(x, 1, SmoothKind::mean), x);
  EXPECT_EQ(smooth(x, 1, SmoothKind::median), x);
}

TEST(Smooth, MeanReducesWhiteNoiseVariance) {
  detail::Rng rng(7);
  std::vector<double> v(500);
  for (auto& x : v) x = rng.normal();
  const auto s = smooth(hourly(v), 5, SmoothKind::mean);
  const double ratio = detail::variance(s.values()) / (detail::variance(v) / 5.0);
  EXPECT_GT(ratio, 0.7);
  EXPECT_LT(ratio, 1.3);
}

TEST(Smooth, WindowTooLarge) {
  try {
    smooth(hourly({1, 2, 3}), 5, SmoothKind::mean);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WindowTooLarge);
  }
}

TEST(Aggregate, ConstantMean) {
  const TimeSeries x(0, 300, std::vector<double>(12, 2.0));
  const auto h = aggregate(x, Frequency::hourly);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_DOUBLE_EQ(h[0], 2.0);
}

TEST(Aggregate, DailySum) {
  std::vector<double> v(24);
  for (int i = 0; i < 24; ++i) v[i] = i + 1;
  const auto d = aggregate(hourly(v), Frequency::daily, AggregateKind::sum);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d[0], 300.0);
}

TEST(Aggregate, LengthBookkeeping) {
  for (std::size_t n : {12u, 13u, 100u, 1007u}) {
    const TimeSeries x(0, 300, std::vector<double>(n, 1.0));
    EXPECT_EQ(aggregate(x, Frequency::hourly).size(), n / 12);
  }
}

TEST(Aggregate, SameFrequencyIdentityAndIncompatible) {
  const auto x = hourly({1, 2, 3});
  EXPECT_EQ(aggregate(x, Frequency::hourly), x);
  try {
    aggregate(TimeSeries(0, 7, {1.0, 2.0}), Frequency::hourly);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IncompatibleFrequency);
  }
}

TEST(LogTransform, ExactLogs) {
  const auto r = log_transform(hourly({std::exp(1.0), std::exp(2.0), std::exp(3.0)}));
  EXPECT_EQ(r.offset, 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.series[i], i + 1.0, 1e-12);
}

TEST(LogTransform, RoundTrip) {
  const auto x = hourly({-3.0, 0.0, 0.25, 10.0, 1e6});
  const auto r = log_transform(x);
  const auto back = inverse_log_transform(r.series, r.offset);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-9 * std::max(1.0, std::abs(x[i])));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_GE(x[i] + r.offset, 1.0 - 1e-12);
}

TEST(LogTransform, ReducesSkewness) {
  detail::Rng rng(3);
  std::vector<double> v(2000);
  for (auto& x : v) x = std::exp(rng.normal());
  const auto r = log_transform(hourly(v));
  EXPECT_LT(std::abs(detail::skewness(r.series.values())), std::abs(detail::skewness(v)));
}

TEST(Csv, ParsesRfc3339AndEpochAndMaterializesGaps) {
  std::istringstream in(
      "timestamp,value\n2014-07-01T00:00:00Z,1\n2014-07-01T01:00:00Z,\n2014-07-01 03:00:00,4\n");
  const auto c = read_series_csv(in);
  EXPECT_EQ(c.series.step(), 3600);
  ASSERT_EQ(c.series.size(), 4u);
  EXPECT_EQ(c.materialized, 1u);
  EXPECT_TRUE(is_missing(c.series[1]));
  EXPECT_TRUE(is_missing(c.series[2]));
  EXPECT_EQ(c.series[3], 4.0);
  EXPECT_EQ(parse_timestamp("1404172800"), parse_timestamp("2014-07-01T00:00:00Z"));
  EXPECT_EQ(parse_timestamp("2014-07-01T02:00:00+02:00"), parse_timestamp("2014-07-01T00:00:00Z"));
  EXPECT_EQ(format_timestamp(1404172800), "2014-07-01T00:00:00Z");
}

TEST(Csv, Malformed) {
  std::istringstream a("timestamp,value\nnot-a-time,1\n");
  std::istringstream b("timestamp,value\n0,abc\n");
  std::istringstream c("1\n");
  for (auto* in : {&a, &b, &c}) {
    try {
      read_series_csv(*in);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::MalformedCsv);
    }
  }
}
