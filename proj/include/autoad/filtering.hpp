#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "autoad/config.hpp"
#include "autoad/detail/stats.hpp"
#include "autoad/error.hpp"
#include "autoad/series.hpp"
#include "autoad/structural.hpp"
#include "autoad/tail.hpp"

namespace autoad {

using StateVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

/// Linear-Gaussian state space: y_t = A x_t + v_t, x_{t+1} = C x_t + w_t.
struct StateSpaceModel {
  int state_dim = 1;
  StateMatrix A;  ///< 1 x m
  StateMatrix C;  ///< m x m
  StateMatrix Q;
  double R = 1.0;
  StateVector x0;
  StateMatrix P0;
  double forgetting = 0.99;
  double eta_var_floor = 1e-300;
  std::size_t stats_burn_in = 10;
  bool log_scale = false;
  double log_offset = 0.0;
  double center = 0.0;  ///< observations enter as (y - center) / unit
  double unit = 1.0;
  double noise_ratio = 0.0;  ///< selected Q/R scale
  std::size_t n_train = 0;
};

struct FilterState {
  StateVector x_prior, x_post;
  StateMatrix P_prior, P_post;
  double eta = 0.0;
  double eta_mean = 0.0;
  double eta_var = 0.0;
  double weight = 0.0;  ///< sum of forgetting weights
  double m2 = 0.0;      ///< weighted sum of squared deviations
  double innovation = 0.0;
  double innovation_var = 0.0;
  std::size_t steps = 0;
};

/// Level-only (m = 1) or level + slope (m = 2) model.
inline StateSpaceModel make_state_space(int state_dim, double q_scale, double r, double forgetting = 0.99) {
  if (state_dim != 1 && state_dim != 2) throw Error(ErrorKind::InvalidArgument, "state_dim must be 1 or 2");
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "measurement variance must be positive");
  StateSpaceModel m;
  m.state_dim = state_dim;
  m.R = r;
  m.forgetting = forgetting;
  m.noise_ratio = r > 0.0 ? q_scale / r : 0.0;
  if (state_dim == 1) {
    m.A = StateMatrix::Ones(1, 1);
    m.C = StateMatrix::Ones(1, 1);
    m.Q = StateMatrix::Constant(1, 1, q_scale);
  } else {
    m.A = StateMatrix::Zero(1, 2);
    m.A(0, 0) = 1.0;
    m.C = StateMatrix::Identity(2, 2);
    m.C(0, 1) = 1.0;
    m.Q = StateMatrix::Zero(2, 2);
    m.Q(0, 0) = q_scale;
    m.Q(1, 1) = 0.01 * q_scale;
  }
  m.x0 = StateVector::Zero(state_dim);
  m.P0 = StateMatrix::Identity(state_dim, state_dim);
  return m;
}

/// Original observation -> filter units (log, then center and scale).
inline double to_filter_units(const StateSpaceModel& m, double y) {
  const double v = m.log_scale ? log_forward(y, m.log_offset) : y;
  return (v - m.center) / m.unit;
}

inline double from_filter_units(const StateSpaceModel& m, double v) {
  const double w = m.center + m.unit * v;
  return m.log_scale ? log_inverse(w, m.log_offset) : w;
}

inline FilterState initial_filter_state(const StateSpaceModel& model) {
  FilterState s;
  s.x_post = model.x0;
  s.P_post = model.P0;
  s.x_prior = model.x0;
  s.P_prior = model.P0;
  return s;
}

namespace detail {

inline StateMatrix symmetrized(const StateMatrix& P) { return 0.5 * (P + P.transpose()); }

inline void predict_into(const StateSpaceModel& model, FilterState& s) {
  s.x_prior = model.C * s.x_post;
  s.P_prior = symmetrized(model.C * s.P_post * model.C.transpose() + model.Q);
}

/// Forgetting-weighted Welford update; lambda = 1 gives the batch moments.
inline void update_eta_stats(FilterState& s, double eta, double lambda) {
  s.weight = lambda * s.weight + 1.0;
  const double delta = eta - s.eta_mean;
  s.eta_mean += delta / s.weight;
  s.m2 = lambda * s.m2 + delta * (eta - s.eta_mean);
  s.eta_var = std::max(0.0, s.m2 / s.weight);
}

}  // namespace detail

/// Predict + update with observation y (on the model scale).
inline FilterState kalman_step(const StateSpaceModel& model, const FilterState& state, double y) {
  if (!std::isfinite(y)) throw Error(ErrorKind::InvalidArgument, "kalman_step requires a finite observation");
  FilterState s = state;
  detail::predict_into(model, s);
  double S = (model.A * s.P_prior * model.A.transpose())(0, 0) + model.R;
  if (!(S > 0.0)) {
    s.P_prior = detail::symmetrized(s.P_prior);
    S = (model.A * s.P_prior * model.A.transpose())(0, 0) + model.R;
    if (!(S > 0.0)) throw Error(ErrorKind::NumericalBreakdown, "non-positive innovation variance");
  }
  const StateVector K = s.P_prior * model.A.transpose() / S;
  const double innovation = y - (model.A * s.x_prior)(0, 0);
  s.x_post = s.x_prior + K * innovation;
  const auto m = model.state_dim;
  s.P_post = detail::symmetrized((StateMatrix::Identity(m, m) - K * model.A) * s.P_prior);
  s.innovation = innovation;
  s.innovation_var = S;
  s.eta = s.x_post(0) - s.x_prior(0);
  ++s.steps;
  if (s.steps > model.stats_burn_in) detail::update_eta_stats(s, s.eta, model.forgetting);
  return s;
}

/// Time update only; used for observations flagged as anomalous.
inline FilterState kalman_predict_only(const StateSpaceModel& model, const FilterState& state) {
  FilterState s = state;
  detail::predict_into(model, s);
  s.x_post = s.x_prior;
  s.P_post = s.P_prior;
  s.innovation = 0.0;
  s.innovation_var = (model.A * s.P_prior * model.A.transpose())(0, 0) + model.R;
  s.eta = 0.0;
  ++s.steps;
  return s;
}

/// Residual eta of a tentative step against the running N(eta_mean, eta_var).
inline double anomaly_probability_filtering(const FilterState& state, const StateSpaceModel& model, double y) {
  const FilterState next = kalman_step(model, state, y);
  const double var = std::max(state.eta_var, model.eta_var_floor);
  return anomaly_probability_from_z((next.eta - state.eta_mean) / std::sqrt(var));
}

/// h-step predictive mean and std of y on the model scale.
inline std::vector<ForecastPoint> forecast_filtering(const StateSpaceModel& model, const FilterState& state,
                                                     std::size_t h) {
  std::vector<ForecastPoint> out;
  StateVector x = state.x_post;
  StateMatrix P = state.P_post;
  for (std::size_t k = 0; k < h; ++k) {
    x = model.C * x;
    P = detail::symmetrized(model.C * P * model.C.transpose() + model.Q);
    const double var = (model.A * P * model.A.transpose())(0, 0) + model.R;
    out.push_back({(model.A * x)(0, 0), std::sqrt(std::max(var, 0.0))});
  }
  return out;
}

namespace detail {

/// Concentrated Gaussian prediction-error log-likelihood at R = 1, Q = ratio * D.
/// Returns {loglik, R_hat}.
inline std::pair<double, double> concentrated_loglik(const std::vector<double>& y, int state_dim, double ratio,
                                                     double prior_scale) {
  StateSpaceModel model = make_state_space(state_dim, ratio, 1.0);
  model.x0(0) = y.front();
  model.P0 = StateMatrix::Identity(state_dim, state_dim) * prior_scale;
  model.stats_burn_in = std::numeric_limits<std::size_t>::max();
  FilterState s = initial_filter_state(model);
  const std::size_t burn = static_cast<std::size_t>(state_dim) + 1;
  double sum_log_f = 0.0, sum_scaled = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t < y.size(); ++t) {
    s = kalman_step(model, s, y[t]);
    if (t <= burn) continue;
    sum_log_f += std::log(s.innovation_var);
    sum_scaled += s.innovation * s.innovation / s.innovation_var;
    ++count;
  }
  const double n = static_cast<double>(count);
  const double r_hat = sum_scaled / n;
  if (!(r_hat > 0.0)) return {std::numeric_limits<double>::infinity(), 0.0};
  return {-0.5 * (sum_log_f + n * std::log(r_hat) + n), r_hat};
}

}  // namespace detail

/// Chooses the Q/R ratio on a 7-point log grid followed by golden-section
/// refinement, then runs the filter over the training data so the residual
/// statistics are populated. Returns the model and the state after training.
inline std::pair<StateSpaceModel, FilterState> fit_filtering(const TimeSeries& ts, const ModelConfig& config) {
  if (!ts.complete()) throw Error(ErrorKind::InvalidArgument, "filtering fit requires an imputed series");
  if (ts.size() < 30) throw Error(ErrorKind::InsufficientData, "filtering fit needs at least 30 points");
  const int dim = config.filtering.state_dim;
  std::vector<double> y(ts.values().begin(), ts.values().end());
  double offset = 0.0;
  if (config.log_scale) {
    offset = log_offset_for(y);
    for (double& v : y) v = log_forward(v, offset);
  }
  // Standardizing keeps squared innovations representable for extreme inputs.
  const double center = detail::median(y);
  double spread = 0.0;
  for (double v : y) spread = std::max(spread, std::abs(v - center));
  double unit = 1.0;
  if (spread > 0.0 && std::isfinite(spread)) {
    std::vector<double> shrunk(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) shrunk[i] = (y[i] - center) / spread;
    const double sd = std::sqrt(detail::variance(shrunk));
    unit = sd > 0.0 ? spread * sd : spread;
  }
  for (double& v : y) v = (v - center) / unit;
  const double prior_scale = 1e6;

  constexpr std::array<double, 7> grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  std::size_t best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ll = detail::concentrated_loglik(y, dim, grid[i], prior_scale).first;
    if (ll > best_ll) {
      best_ll = ll;
      best = i;
    }
  }
  double lo = std::log(grid[best == 0 ? 0 : best - 1]);
  double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
  auto neg_ll = [&](double log_ratio) {
    const double ll = detail::concentrated_loglik(y, dim, std::exp(log_ratio), prior_scale).first;
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - golden * (hi - lo), b = lo + golden * (hi - lo);
  double fa = neg_ll(a), fb = neg_ll(b);
  for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
    if (fa <= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - golden * (hi - lo);
      fa = neg_ll(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + golden * (hi - lo);
      fb = neg_ll(b);
    }
  }
  double ratio = std::exp(0.5 * (lo + hi));
  if (!(-neg_ll(std::log(ratio)) >= best_ll)) ratio = grid[best];
  const double r_hat = detail::concentrated_loglik(y, dim, ratio, prior_scale).second;

  const double scale = std::max(detail::variance(y), std::numeric_limits<double>::min());
  const double r_floor = 1e-10 * scale + std::numeric_limits<double>::min();
  const double r = std::max(r_hat, r_floor);

  StateSpaceModel model = make_state_space(dim, ratio * r, r, config.filtering.forgetting);
  model.noise_ratio = ratio;
  model.x0(0) = y.front();
  model.P0 = StateMatrix::Identity(dim, dim) * (prior_scale * r);
  model.eta_var_floor = 1e-12 * scale + std::numeric_limits<double>::min();
  model.log_scale = config.log_scale;
  model.log_offset = offset;
  model.center = center;
  model.unit = unit;
  model.n_train = y.size();

  // Initial state from a diffuse filter run over the reversed series; the
  // slope changes sign under time reversal.
  {
    StateSpaceModel rev = model;
    rev.x0(0) = y.back();
    rev.stats_burn_in = std::numeric_limits<std::size_t>::max();
    FilterState s = initial_filter_state(rev);
    for (std::size_t t = y.size() - 1; t-- > 0;) s = kalman_step(rev, s, y[t]);
    model.x0 = s.x_post;
    if (dim == 2) model.x0(1) = -model.x0(1);
  }
  // Steady-state covariance, so the diffuse-prior transient does not inflate
  // the residual statistics collected below.
  StateMatrix P = model.P0;
  for (std::size_t t = 1; t < y.size(); ++t) {
    const StateMatrix prior = detail::symmetrized(model.C * P * model.C.transpose() + model.Q);
    const double S = (model.A * prior * model.A.transpose())(0, 0) + model.R;
    const StateVector K = prior * model.A.transpose() / S;
    P = detail::symmetrized((StateMatrix::Identity(dim, dim) - K * model.A) * prior);
  }
  model.P0 = P;
  FilterState state = initial_filter_state(model);
  for (std::size_t t = 1; t < y.size(); ++t) state = kalman_step(model, state, y[t]);
  return {model, state};
}

}  // namespace autoad
