#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "autoad/error.hpp"

namespace autoad {

namespace detail {

inline void check_binary(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "scores and labels differ in length");
  for (double v : p)
    if (std::isnan(v)) throw Error(ErrorKind::InvalidArgument, "NaN score");
  for (int v : y)
    if (v != 0 && v != 1) throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
}

}  // namespace detail

/// Mann-Whitney AUC with midranks for ties.
inline double auc(std::span<const double> probabilities, std::span<const int> labels) {
  detail::check_binary(probabilities, labels);
  const std::size_t n = probabilities.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return probabilities[a] < probabilities[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && probabilities[order[j]] == probabilities[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) rank_sum += midrank, ++pos;
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorKind::SingleClass, "AUC needs both classes");
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC vertices from (0,0) to (1,1), one per distinct score, thresholds descending.
inline std::vector<RocPoint> roc_points(std::span<const double> probabilities, std::span<const int> labels) {
  detail::check_binary(probabilities, labels);
  const std::size_t n = probabilities.size();
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorKind::SingleClass, "ROC needs both classes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return probabilities[a] > probabilities[b]; });
  std::vector<RocPoint> out{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && probabilities[order[j]] == probabilities[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1;
      ++j;
    }
    out.push_back({static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
    i = j;
  }
  return out;
}

/// Trapezoidal area under ROC vertices.
inline double roc_area(std::span<const RocPoint> pts) {
  double a = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) a += (pts[i].fpr - pts[i - 1].fpr) * 0.5 * (pts[i].tpr + pts[i - 1].tpr);
  return a;
}

struct ForecastMetrics {
  double mdape = 0.0;  ///< percent
  double rmse = 0.0;
};

/// MDAPE in percent with |actual| floored at eps, and RMSE.
inline ForecastMetrics forecast_metrics(std::span<const double> pred, std::span<const double> actual,
                                        double eps = 1e-9) {
  if (pred.size() != actual.size()) throw Error(ErrorKind::LengthMismatch, "prediction and actual differ in length");
  if (pred.empty()) throw Error(ErrorKind::InvalidArgument, "forecast metrics of an empty sample");
  std::vector<double> ape(pred.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - actual[i];
    ape[i] = std::abs(e) / std::max(std::abs(actual[i]), eps);
    sq += e * e;
  }
  std::sort(ape.begin(), ape.end());
  const std::size_t m = ape.size() / 2;
  const double median = ape.size() % 2 ? ape[m] : 0.5 * (ape[m - 1] + ape[m]);
  return {100.0 * median, std::sqrt(sq / static_cast<double>(pred.size()))};
}

}  // namespace autoad
