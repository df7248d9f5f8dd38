#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "autoad/detail/rng.hpp"
#include "autoad/filtering.hpp"

using namespace autoad;

namespace {

TimeSeries hourly(std::vector<double> v) { return TimeSeries::from_values(std::move(v)); }

ModelConfig filtering_config(int dim, double forgetting = 0.99) {
  ModelConfig c;
  c.method = Method::filtering;
  c.filtering.state_dim = dim;
  c.filtering.forgetting = forgetting;
  return c;
}

// Hand-coded 2x2 recursion for the local linear trend model.
struct Direct2 {
  double x[2], P[2][2];
  double q0, q1, r;

  void step(double y) {
    const double xp[2] = {x[0] + x[1], x[1]};
    double Pp[2][2];
    Pp[0][0] = P[0][0] + P[0][1] + P[1][0] + P[1][1] + q0;
    Pp[0][1] = P[0][1] + P[1][1];
    Pp[1][0] = P[1][0] + P[1][1];
    Pp[1][1] = P[1][1] + q1;
    const double s = Pp[0][0] + r;
    const double k0 = Pp[0][0] / s, k1 = Pp[1][0] / s;
    const double innov = y - xp[0];
    x[0] = xp[0] + k0 * innov;
    x[1] = xp[1] + k1 * innov;
    P[0][0] = (1 - k0) * Pp[0][0];
    P[0][1] = (1 - k0) * Pp[0][1];
    P[1][0] = Pp[1][0] - k1 * Pp[0][0];
    P[1][1] = Pp[1][1] - k1 * Pp[0][1];
  }
};

}  // namespace

TEST(Kalman, ScalarHandEvaluated) {
  StateSpaceModel m = make_state_space(1, 0.1, 1.0);
  m.x0(0) = 0.0;
  m.P0(0, 0) = 1.0;
  const auto s = kalman_step(m, initial_filter_state(m), 1.0);
  const double K = 1.1 / 2.1;
  EXPECT_NEAR(s.x_post(0), K, 1e-15);
  EXPECT_NEAR(s.x_post(0), 0.52381, 1e-5);
  EXPECT_NEAR(s.P_post(0, 0), (1.0 - K) * 1.1, 1e-15);
  EXPECT_NEAR(s.eta, K, 1e-15);
}

TEST(Kalman, NoiselessConstantTracking) {
  StateSpaceModel m = make_state_space(1, 0.0, 1e-9);
  auto s = initial_filter_state(m);
  for (int i = 0; i < 50; ++i) s = kalman_step(m, s, 4.2);
  EXPECT_NEAR(s.x_post(0), 4.2, 1e-6);
  EXPECT_NEAR(s.eta, 0.0, 1e-9);
}

TEST(Kalman, ScalarMatchesDirectRecursionOn100Configs) {
  detail::Rng rng(2024);
  for (int c = 0; c < 100; ++c) {
    const double q = std::exp(rng.uniform(-6.0, 2.0)), r = std::exp(rng.uniform(-3.0, 3.0));
    StateSpaceModel m = make_state_space(1, q, r);
    m.x0(0) = rng.normal();
    m.P0(0, 0) = std::exp(rng.uniform(-2.0, 4.0));
    auto s = initial_filter_state(m);
    double x = m.x0(0), P = m.P0(0, 0);
    for (int t = 0; t < 200; ++t) {
      const double y = 5.0 * rng.normal();
      s = kalman_step(m, s, y);
      const double pp = P + q;
      const double k = pp / (pp + r);
      x = x + k * (y - x);
      P = (1.0 - k) * pp;
      ASSERT_NEAR(s.x_post(0), x, 1e-10 * (1.0 + std::abs(x)));
      ASSERT_NEAR(s.P_post(0, 0), P, 1e-10 * (1.0 + P));
    }
  }
}

TEST(Kalman, TrendModelMatchesDirectRecursion) {
  detail::Rng rng(99);
  StateSpaceModel m = make_state_space(2, 0.3, 0.8);
  m.x0 << 1.0, -0.5;
  m.P0 << 2.0, 0.3, 0.3, 1.0;
  Direct2 d{{1.0, -0.5}, {{2.0, 0.3}, {0.3, 1.0}}, 0.3, 0.003, 0.8};
  auto s = initial_filter_state(m);
  for (int t = 0; t < 500; ++t) {
    const double y = 0.1 * t + rng.normal();
    s = kalman_step(m, s, y);
    d.step(y);
    for (int i = 0; i < 2; ++i) {
      ASSERT_NEAR(s.x_post(i), d.x[i], 1e-10 * (1.0 + std::abs(d.x[i])));
      for (int j = 0; j < 2; ++j) {
        const double sym = 0.5 * (d.P[i][j] + d.P[j][i]);
        ASSERT_NEAR(s.P_post(i, j), sym, 1e-10);
      }
    }
  }
}

TEST(Kalman, CovarianceStaysSymmetricPsd) {
  detail::Rng rng(7);
  StateSpaceModel m = make_state_space(2, 1e-3, 1.0);
  auto s = initial_filter_state(m);
  for (int t = 0; t < 100000; ++t) {
    s = kalman_step(m, s, 1e3 * rng.normal());
    if (t % 997 != 0) continue;
    ASSERT_EQ(s.P_post(0, 1), s.P_post(1, 0));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(s.P_post));
    ASSERT_GE(es.eigenvalues().minCoeff(), -1e-12 * es.eigenvalues().maxCoeff());
  }
}

TEST(Kalman, EtaStatisticsWithoutForgettingAreBatchMoments) {
  StateSpaceModel m = make_state_space(1, 0.2, 1.0, 1.0);
  m.stats_burn_in = 0;
  detail::Rng rng(4);
  auto s = initial_filter_state(m);
  std::vector<double> etas;
  for (int t = 0; t < 300; ++t) {
    s = kalman_step(m, s, rng.normal());
    etas.push_back(s.eta);
  }
  double mean = 0.0;
  for (double e : etas) mean += e;
  mean /= static_cast<double>(etas.size());
  double var = 0.0;
  for (double e : etas) var += (e - mean) * (e - mean);
  var /= static_cast<double>(etas.size());
  EXPECT_NEAR(s.eta_mean, mean, 1e-12);
  EXPECT_NEAR(s.eta_var, var, 1e-12);
}

TEST(FitFiltering, RecoversLocalLevelRatio) {
  detail::Rng rng(123);
  std::vector<double> v(3000);
  double level = 0.0;
  for (auto& y : v) {
    level += std::sqrt(0.1) * rng.normal();
    y = level + rng.normal();
  }
  const auto [model, state] = fit_filtering(hourly(v), filtering_config(1));
  EXPECT_GT(model.noise_ratio, 0.1 / 3.0);
  EXPECT_LT(model.noise_ratio, 0.1 * 3.0);
  EXPECT_EQ(state.steps, v.size() - 1);
}

TEST(FitFiltering, ConstantSeries) {
  const auto [model, state] = fit_filtering(hourly(std::vector<double>(100, 3.0)), filtering_config(1));
  EXPECT_LE(model.R * model.unit * model.unit, 1e-9);
  EXPECT_NEAR(state.eta_var, 0.0, 1e-12);
}

TEST(FitFiltering, WhiteNoiseOneStepVariance) {
  detail::Rng rng(55);
  std::vector<double> v(1500);
  for (auto& y : v) y = rng.normal();
  const auto [model, state] = fit_filtering(hourly(v), filtering_config(1));
  const auto f = forecast_filtering(model, state, 1);
  const double var = f[0].std * f[0].std * model.unit * model.unit;
  EXPECT_NEAR(var, 1.0, 0.2);
}

TEST(FitFiltering, InsufficientData) {
  try {
    fit_filtering(hourly(std::vector<double>(20, 1.0)), filtering_config(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(FilteringProbability, ZeroAndReferenceQuantile) {
  StateSpaceModel m = make_state_space(1, 0.5, 1.0);
  FilterState s = initial_filter_state(m);
  s.x_post(0) = 2.0;
  s.P_post(0, 0) = 0.5;
  s.eta_mean = 0.1;
  s.eta_var = 0.04;
  const double K = (0.5 + 0.5) / (0.5 + 0.5 + 1.0);
  auto y_for_eta = [&](double eta) { return 2.0 + eta / K; };
  EXPECT_NEAR(anomaly_probability_filtering(s, m, y_for_eta(0.1)), 0.0, 1e-12);
  const double eta = 0.1 + 1.959964 * 0.2;
  EXPECT_NEAR(anomaly_probability_filtering(s, m, y_for_eta(eta)), 0.95, 1e-4);
  EXPECT_NEAR(anomaly_probability_filtering(s, m, y_for_eta(0.1 - 1.959964 * 0.2)), 0.95, 1e-4);
  EXPECT_NEAR(anomaly_probability_filtering(s, m, y_for_eta(eta)), anomaly_probability(eta, 0.1, 0.2), 1e-12);
}

TEST(FilteringProbability, TenSigmaSpikeAfterQuietTraining) {
  detail::Rng rng(17);
  std::vector<double> v(500);
  for (auto& y : v) y = 50.0 + rng.normal();
  const auto [model, state] = fit_filtering(hourly(v), filtering_config(1));
  const double p = anomaly_probability_filtering(state, model, to_filter_units(model, 60.0));
  EXPECT_GT(p, 0.999);
}

TEST(FilteringForecast, StdNonDecreasing) {
  detail::Rng rng(3);
  std::vector<double> v(300);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = 0.05 * static_cast<double>(t) + rng.normal();
  const auto [model, state] = fit_filtering(hourly(v), filtering_config(2));
  const auto f = forecast_filtering(model, state, 10);
  for (std::size_t h = 1; h < f.size(); ++h) EXPECT_GE(f[h].std, f[h - 1].std);
}
