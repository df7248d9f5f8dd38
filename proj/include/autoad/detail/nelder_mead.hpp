#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace autoad::detail {

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  double initial_step = 0.1;
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-8;
  int max_iterations = 4000;
};

/// Derivative-free simplex minimization with the standard coefficients
/// (reflect 1, expand 2, contract 0.5, shrink 0.5). Deterministic.
template <typename F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, const NelderMeadOptions& opt = {}) {
  const std::size_t dim = x0.size();
  NelderMeadResult res;
  if (dim == 0) {
    res.x = x0;
    res.value = f(x0);
    res.converged = true;
    return res;
  }
  std::vector<std::vector<double>> simplex(dim + 1, x0);
  std::vector<double> values(dim + 1);
  for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += opt.initial_step;
  for (std::size_t i = 0; i <= dim; ++i) values[i] = f(simplex[i]);

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), trial(dim), trial2(dim);
  auto point_along = [&](double coef, std::vector<double>& out, const std::vector<double>& worst) {
    for (std::size_t j = 0; j < dim; ++j) out[j] = centroid[j] + coef * (worst[j] - centroid[j]);
  };

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[dim - 1];

    double x_spread = 0.0;
    for (std::size_t i = 0; i <= dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        x_spread = std::max(x_spread, std::abs(simplex[i][j] - simplex[best][j]));
    const double f_spread = std::abs(values[worst] - values[best]);
    const bool flat = std::isfinite(values[worst]) &&
                      f_spread <= opt.f_tolerance * (std::abs(values[best]) + opt.f_tolerance);
    if (flat || x_spread <= opt.x_tolerance) {
      res.converged = std::isfinite(values[best]);
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j] / static_cast<double>(dim);
    }
    point_along(-1.0, trial, simplex[worst]);
    const double f_reflect = f(trial);
    if (f_reflect < values[best]) {
      point_along(-2.0, trial2, simplex[worst]);
      const double f_expand = f(trial2);
      if (f_expand < f_reflect) {
        simplex[worst] = trial2;
        values[worst] = f_expand;
      } else {
        simplex[worst] = trial;
        values[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < values[second]) {
      simplex[worst] = trial;
      values[worst] = f_reflect;
      continue;
    }
    const bool outside = f_reflect < values[worst];
    point_along(outside ? -0.5 : 0.5, trial2, simplex[worst]);
    const double f_contract = f(trial2);
    if (f_contract < (outside ? f_reflect : values[worst])) {
      simplex[worst] = trial2;
      values[worst] = f_contract;
      continue;
    }
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < dim; ++j) simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      values[i] = f(simplex[i]);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  res.x = simplex[static_cast<std::size_t>(it - values.begin())];
  res.value = *it;
  return res;
}

}  // namespace autoad::detail
