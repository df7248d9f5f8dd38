#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "autoad/config.hpp"
#include "autoad/detail/nelder_mead.hpp"
#include "autoad/detail/stats.hpp"
#include "autoad/error.hpp"
#include "autoad/profiling.hpp"
#include "autoad/series.hpp"
#include "autoad/tail.hpp"

namespace autoad {

struct ForecastPoint {
  double mean = 0.0;
  double std = 0.0;
};

/// Mutable scoring state of a structural model. Everything lives on the
/// transformed (log) scale; histories are most-recent-first.
struct StructuralState {
  std::size_t t = 0;          ///< grid index of the next observation
  std::vector<double> recent; ///< last d transformed observations
  std::vector<double> r_hist; ///< last p regression residuals
  std::vector<double> e_hist; ///< last q innovations
};

/// ARMA(p,q) errors around an intercept plus cos/sin regressors, fitted on
/// the d-times differenced (optionally log) series. Immutable after fit.
struct StructuralModel {
  int p = 0;
  int q = 0;
  std::vector<double> phi;
  std::vector<double> omega;  ///< MA coefficients, e_t + omega_1 e_{t-1} + ...
  std::vector<double> theta;  ///< cos_1, sin_1, cos_2, sin_2, ...
  std::vector<double> frequencies;
  double intercept = 0.0;
  int d = 0;
  bool log_scale = false;
  double log_offset = 0.0;
  double sigma2 = 1.0;
  double train_mean = 0.0;       ///< mean of the training data, original scale
  double transformed_mean = 0.0; ///< mean of the training data, transformed scale
  std::vector<double> residuals; ///< in-sample innovations
  bool ar_stationary = true;
  std::size_t n_train = 0;
  StructuralState end_state;     ///< state after consuming the training data
};

namespace detail {

/// Schur-Cohn step-down: true when 1 - a_1 z - ... - a_p z^p has all roots
/// outside the unit circle (reflection coefficients strictly inside `bound`).
inline bool ar_polynomial_stable(std::span<const double> a, double bound = 1.0) {
  std::vector<double> c(a.begin(), a.end());
  for (std::size_t k = c.size(); k > 0; --k) {
    const double r = c[k - 1];
    if (!std::isfinite(r) || !(std::abs(r) < bound)) return false;
    const double denom = 1.0 - r * r;
    std::vector<double> next(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) next[i] = (c[i] + r * c[k - 2 - i]) / denom;
    c = std::move(next);
  }
  return true;
}

inline bool ma_polynomial_invertible(std::span<const double> omega, double bound = 1.0) {
  std::vector<double> neg(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) neg[i] = -omega[i];
  return ar_polynomial_stable(neg, bound);
}

/// Levinson-Durbin solution of the Yule-Walker equations.
inline std::vector<double> yule_walker(std::span<const double> x, int order) {
  std::vector<double> phi;
  if (order <= 0) return phi;
  const std::size_t n = x.size();
  const double m = mean(x);
  std::vector<double> gamma(static_cast<std::size_t>(order) + 1, 0.0);
  for (int k = 0; k <= order; ++k) {
    double s = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) s += (x[t] - m) * (x[t - k] - m);
    gamma[static_cast<std::size_t>(k)] = s / static_cast<double>(n);
  }
  phi.assign(static_cast<std::size_t>(order), 0.0);
  if (!(gamma[0] > 0.0)) return phi;
  double err = gamma[0];
  std::vector<double> prev;
  for (int k = 1; k <= order; ++k) {
    double acc = gamma[static_cast<std::size_t>(k)];
    for (int j = 1; j < k; ++j) acc -= prev[static_cast<std::size_t>(j - 1)] * gamma[static_cast<std::size_t>(k - j)];
    const double refl = acc / err;
    std::vector<double> cur(static_cast<std::size_t>(k));
    for (int j = 1; j < k; ++j)
      cur[static_cast<std::size_t>(j - 1)] =
          prev[static_cast<std::size_t>(j - 1)] - refl * prev[static_cast<std::size_t>(k - j - 1)];
    cur[static_cast<std::size_t>(k - 1)] = refl;
    err *= (1.0 - refl * refl);
    prev = std::move(cur);
    if (!(err > 0.0)) break;
  }
  for (std::size_t i = 0; i < prev.size(); ++i) phi[i] = prev[i];
  return phi;
}

/// Conditional innovations: e_t = 0 for t < p.
inline double css_innovations(std::span<const double> r, std::span<const double> phi, std::span<const double> omega,
                              std::vector<double>& e) {
  const std::size_t n = r.size(), p = phi.size(), q = omega.size();
  e.assign(n, 0.0);
  double sse = 0.0;
  for (std::size_t t = p; t < n; ++t) {
    double pred = 0.0;
    for (std::size_t i = 0; i < p; ++i) pred += phi[i] * r[t - 1 - i];
    for (std::size_t j = 0; j < q && j < t; ++j) pred += omega[j] * e[t - 1 - j];
    e[t] = r[t] - pred;
    sse += e[t] * e[t];
  }
  return sse;
}

/// z_t = w_t + sum_i c_i z_{t-i} for w = (1-B)^d z.
inline std::vector<double> integration_weights(int d) {
  std::vector<double> c(static_cast<std::size_t>(d));
  double binom = 1.0;
  for (int i = 1; i <= d; ++i) {
    binom = binom * (d - i + 1) / i;
    c[static_cast<std::size_t>(i - 1)] = (i % 2 == 1 ? 1.0 : -1.0) * binom;
  }
  return c;
}

inline double fourier_term(const StructuralModel& m, std::size_t t) {
  double s = 0.0;
  const double tt = static_cast<double>(t);
  for (std::size_t j = 0; j < m.frequencies.size(); ++j) {
    const double angle = 2.0 * std::numbers::pi * m.frequencies[j] * tt;
    s += m.theta[2 * j] * std::cos(angle) + m.theta[2 * j + 1] * std::sin(angle);
  }
  return s;
}

inline void push_front_bounded(std::vector<double>& v, double x, std::size_t cap) {
  if (cap == 0) return;
  v.insert(v.begin(), x);
  if (v.size() > cap) v.resize(cap);
}

}  // namespace detail

/// One-step-ahead prediction of the next transformed observation.
inline ForecastPoint predict_next(const StructuralModel& m, const StructuralState& s) {
  const double sd = std::sqrt(m.sigma2);
  const auto d = static_cast<std::size_t>(m.d);
  if (s.recent.size() < d) return {s.recent.empty() ? m.transformed_mean : s.recent.front(), sd};
  double w = m.intercept + detail::fourier_term(m, s.t);
  for (std::size_t i = 0; i < s.r_hist.size() && i < m.phi.size(); ++i) w += m.phi[i] * s.r_hist[i];
  for (std::size_t j = 0; j < s.e_hist.size() && j < m.omega.size(); ++j) w += m.omega[j] * s.e_hist[j];
  const auto c = detail::integration_weights(m.d);
  for (std::size_t i = 0; i < d; ++i) w += c[i] * s.recent[i];
  return {w, sd};
}

/// Consumes transformed observation z. Passing the prediction itself yields a
/// zero innovation, which is how flagged anomalies are kept out of the state.
inline void advance(const StructuralModel& m, StructuralState& s, double z) {
  const auto d = static_cast<std::size_t>(m.d);
  if (s.recent.size() == d) {
    double w = z;
    const auto c = detail::integration_weights(m.d);
    for (std::size_t i = 0; i < d; ++i) w -= c[i] * s.recent[i];
    const double r = w - m.intercept - detail::fourier_term(m, s.t);
    double arma = 0.0;
    for (std::size_t i = 0; i < s.r_hist.size() && i < m.phi.size(); ++i) arma += m.phi[i] * s.r_hist[i];
    for (std::size_t j = 0; j < s.e_hist.size() && j < m.omega.size(); ++j) arma += m.omega[j] * s.e_hist[j];
    detail::push_front_bounded(s.r_hist, r, static_cast<std::size_t>(m.p));
    detail::push_front_bounded(s.e_hist, r - arma, static_cast<std::size_t>(m.q));
  }
  detail::push_front_bounded(s.recent, z, d);
  ++s.t;
}

inline double to_model_scale(const StructuralModel& m, double y) {
  return m.log_scale ? log_forward(y, m.log_offset) : y;
}

inline double from_model_scale(const StructuralModel& m, double z) {
  return m.log_scale ? log_inverse(z, m.log_offset) : z;
}

/// psi-weights of Omega(B) / (Phi(B) (1-B)^d), psi_0 = 1.
inline std::vector<double> psi_weights(const StructuralModel& m, std::size_t count) {
  std::vector<double> poly{1.0};
  for (double f : m.phi) poly.push_back(-f);
  for (int k = 0; k < m.d; ++k) {
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] -= poly[i];
    }
    poly = std::move(next);
  }
  std::vector<double> psi(count, 0.0);
  if (count == 0) return psi;
  psi[0] = 1.0;
  for (std::size_t j = 1; j < count; ++j) {
    double v = j <= m.omega.size() ? m.omega[j - 1] : 0.0;
    for (std::size_t i = 1; i < poly.size() && i <= j; ++i) v -= poly[i] * psi[j - i];
    psi[j] = v;
  }
  return psi;
}

/// h-step forecasts on the transformed scale from an arbitrary state.
/// Var(h) = sigma2 * sum_{j<h} psi_j^2, so the std never decreases with h.
inline std::vector<ForecastPoint> forecast_transformed(const StructuralModel& m, StructuralState s, std::size_t h) {
  std::vector<ForecastPoint> out;
  out.reserve(h);
  const auto psi = psi_weights(m, h);
  double acc = 0.0;
  for (std::size_t k = 0; k < h; ++k) {
    const auto next = predict_next(m, s);
    advance(m, s, next.mean);
    acc += psi[k] * psi[k];
    out.push_back({next.mean, std::sqrt(m.sigma2 * acc)});
  }
  return out;
}

/// Forecast h steps past the training data on the original scale
/// (lognormal mean and std when the model works in log space).
inline std::vector<ForecastPoint> forecast(const StructuralModel& m, std::size_t h) {
  if (h < 1) throw Error(ErrorKind::InvalidArgument, "forecast horizon must be >= 1");
  auto out = forecast_transformed(m, m.end_state, h);
  if (m.log_scale) {
    for (auto& f : out) {
      const double v = f.std * f.std;
      const double level = std::exp(f.mean + 0.5 * v);
      f.std = std::sqrt(std::expm1(v)) * level;
      f.mean = level - m.log_offset;
    }
  }
  return out;
}

inline double anomaly_probability_structural(const StructuralModel&, double observed, double forecast_mean,
                                             double forecast_std) {
  return anomaly_probability(observed, forecast_mean, forecast_std);
}

inline StructuralModel fit_structural(const TimeSeries& ts, const DataProfile& profile, const ModelConfig& config) {
  if (!ts.complete()) throw Error(ErrorKind::InvalidArgument, "structural fit requires an imputed series");
  const auto& sp = config.structural;
  if (sp.p < 0 || sp.q < 0 || sp.l < 0) throw Error(ErrorKind::InvalidArgument, "negative model order");

  StructuralModel m;
  m.p = sp.p;
  m.q = sp.q;
  m.d = profile.diff_order;
  m.log_scale = config.log_scale;
  m.n_train = ts.size();
  m.train_mean = detail::mean(ts.values());

  std::vector<double> z(ts.values().begin(), ts.values().end());
  if (m.log_scale) {
    m.log_offset = log_offset_for(z);
    for (double& v : z) v = log_forward(v, m.log_offset);
  }
  m.transformed_mean = detail::mean(z);

  const std::size_t l = std::min<std::size_t>(static_cast<std::size_t>(sp.l), profile.fourier_terms.size());
  for (std::size_t j = 0; j < l; ++j) m.frequencies.push_back(profile.fourier_terms[j].frequency);

  const auto d = static_cast<std::size_t>(m.d);
  const std::size_t params = static_cast<std::size_t>(m.p + m.q) + 2 * l + 1;
  if (z.size() <= d || z.size() - d < 10 * params)
    throw Error(ErrorKind::InsufficientData, "series too short for the requested orders");
  const auto w = difference(z, m.d);
  const std::size_t n = w.size();

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 * l + 1));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double t = static_cast<double>(i + d);
    X(row, 0) = 1.0;
    for (std::size_t j = 0; j < l; ++j) {
      const double angle = 2.0 * std::numbers::pi * m.frequencies[j] * t;
      X(row, static_cast<Eigen::Index>(1 + 2 * j)) = std::cos(angle);
      X(row, static_cast<Eigen::Index>(2 + 2 * j)) = std::sin(angle);
    }
    y(row) = w[i];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  if (!beta.allFinite()) throw Error(ErrorKind::NumericalBreakdown, "regression produced non-finite coefficients");
  m.intercept = beta(0);
  m.theta.assign(beta.data() + 1, beta.data() + beta.size());
  const Eigen::VectorXd resid = y - X * beta;
  std::vector<double> r(resid.data(), resid.data() + resid.size());

  const auto p = static_cast<std::size_t>(m.p), q = static_cast<std::size_t>(m.q);
  std::vector<double> e;
  if (p + q > 0) {
    constexpr double kBound = 0.9999;
    std::vector<double> start = detail::yule_walker(r, m.p);
    if (!std::all_of(start.begin(), start.end(), [](double v) { return std::isfinite(v); }))
      std::fill(start.begin(), start.end(), 0.0);
    for (int shrink = 0; !detail::ar_polynomial_stable(start, kBound); ++shrink) {
      if (shrink == 200) std::fill(start.begin(), start.end(), 0.0);
      for (double& v : start) v *= 0.9;
    }
    start.resize(p + q, 0.0);
    const double scale = std::max(detail::variance(r), std::numeric_limits<double>::min());
    auto objective = [&](const std::vector<double>& x) {
      std::span<const double> phi(x.data(), p), omega(x.data() + p, q);
      if (!detail::ar_polynomial_stable(phi, kBound) || !detail::ma_polynomial_invertible(omega, kBound))
        return std::numeric_limits<double>::infinity();
      std::vector<double> tmp;
      const double sse = detail::css_innovations(r, phi, omega, tmp);
      return std::isfinite(sse) ? sse / (static_cast<double>(n - p) * scale)
                                : std::numeric_limits<double>::infinity();
    };
    detail::NelderMeadOptions opt;
    opt.max_iterations = sp.max_iterations;
    auto res = detail::nelder_mead(objective, start, opt);
    if (res.converged) {
      // A restart from the optimum guards against premature simplex collapse.
      opt.initial_step = 0.05;
      auto again = detail::nelder_mead(objective, res.x, opt);
      if (again.value <= res.value) res = std::move(again);
    }
    if (!res.converged || !std::isfinite(res.value))
      throw Error(ErrorKind::NonConvergence, "CSS estimation did not converge");
    m.phi.assign(res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(p));
    m.omega.assign(res.x.begin() + static_cast<std::ptrdiff_t>(p), res.x.end());
  }
  const double sse = detail::css_innovations(r, m.phi, m.omega, e);
  m.sigma2 = sse / static_cast<double>(n - p);
  m.sigma2 = std::max(m.sigma2, 1e-12 * (1.0 + detail::variance(z)));
  if (!std::isfinite(m.sigma2)) throw Error(ErrorKind::NumericalBreakdown, "non-finite innovation variance");
  m.residuals.assign(e.begin() + static_cast<std::ptrdiff_t>(p), e.end());
  m.ar_stationary = detail::ar_polynomial_stable(m.phi);

  for (double v : z) advance(m, m.end_state, v);
  return m;
}

}  // namespace autoad
