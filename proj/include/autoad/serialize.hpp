#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "autoad/config.hpp"
#include "autoad/evaluation.hpp"
#include "autoad/filtering.hpp"
#include "autoad/model.hpp"
#include "autoad/profiling.hpp"
#include "autoad/structural.hpp"
#include "autoad/tpe.hpp"

namespace autoad {

using json = nlohmann::json;

namespace detail {

// JSON has no inf/nan; they travel as strings.
inline json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double real_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw Error(ErrorKind::InvalidArgument, "expected a number in JSON");
}

inline json reals_to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(real_to_json(x));
  return a;
}

inline std::vector<double> reals_from_json(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(real_from_json(x));
  return v;
}

template <typename M>
json matrix_to_json(const M& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(real_to_json(m(i, k)));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline StateMatrix matrix_from_json(const json& j) {
  const auto r = static_cast<Eigen::Index>(j.size());
  const auto c = r ? static_cast<Eigen::Index>(j[0].size()) : 0;
  StateMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = real_from_json(j[i][k]);
  return m;
}

inline json vector_to_json(const StateVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(real_to_json(v(i)));
  return a;
}

inline StateVector vector_from_json(const json& j) {
  StateVector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = real_from_json(j[i]);
  return v;
}

}  // namespace detail

inline void to_json(json& j, const ModelConfig& c) {
  j = json{{"truncate_at", c.truncate_at ? json(*c.truncate_at) : json(nullptr)},
           {"max_missing_fraction", c.max_missing_fraction},
           {"log_scale", c.log_scale},
           {"method", to_string(c.method)},
           {"decision_threshold", c.decision_threshold}};
  if (c.method == Method::structural)
    j["structural"] = {{"p", c.structural.p}, {"q", c.structural.q}, {"l", c.structural.l},
                       {"max_iterations", c.structural.max_iterations}};
  else
    j["filtering"] = {{"state_dim", c.filtering.state_dim}, {"forgetting", c.filtering.forgetting}};
}

inline void from_json(const json& j, ModelConfig& c) {
  c = ModelConfig{};
  if (j.contains("truncate_at") && !j["truncate_at"].is_null()) c.truncate_at = j["truncate_at"].get<std::size_t>();
  c.max_missing_fraction = j.value("max_missing_fraction", c.max_missing_fraction);
  c.log_scale = j.value("log_scale", c.log_scale);
  c.method = method_from_string(j.value("method", std::string("structural")));
  c.decision_threshold = j.value("decision_threshold", c.decision_threshold);
  if (j.contains("structural")) {
    const auto& s = j["structural"];
    c.structural.p = s.value("p", c.structural.p);
    c.structural.q = s.value("q", c.structural.q);
    c.structural.l = s.value("l", c.structural.l);
    c.structural.max_iterations = s.value("max_iterations", c.structural.max_iterations);
  }
  if (j.contains("filtering")) {
    const auto& f = j["filtering"];
    c.filtering.state_dim = f.value("state_dim", c.filtering.state_dim);
    c.filtering.forgetting = f.value("forgetting", c.filtering.forgetting);
  }
}

inline void to_json(json& j, const DataProfile& p) {
  json terms = json::array();
  for (const auto& t : p.fourier_terms) terms.push_back({{"frequency", t.frequency}, {"power", t.power}});
  j = json{{"change_points", p.change_points}, {"trend_changes", p.trend_changes},
           {"diff_order", p.diff_order},       {"skewness", detail::real_to_json(p.skewness)},
           {"log_recommended", p.log_recommended}, {"fourier_terms", terms},
           {"missing_fraction", p.missing_fraction}};
}

inline void from_json(const json& j, DataProfile& p) {
  p = DataProfile{};
  p.change_points = j.at("change_points").get<std::vector<std::size_t>>();
  p.trend_changes = j.at("trend_changes").get<std::vector<std::size_t>>();
  p.diff_order = j.at("diff_order").get<int>();
  p.skewness = detail::real_from_json(j.at("skewness"));
  p.log_recommended = j.at("log_recommended").get<bool>();
  for (const auto& t : j.at("fourier_terms"))
    p.fourier_terms.push_back({t.at("frequency").get<double>(), t.at("power").get<double>()});
  p.missing_fraction = j.at("missing_fraction").get<double>();
}

inline void to_json(json& j, const StructuralState& s) {
  j = json{{"t", s.t},
           {"recent", detail::reals_to_json(s.recent)},
           {"r_hist", detail::reals_to_json(s.r_hist)},
           {"e_hist", detail::reals_to_json(s.e_hist)}};
}

inline void from_json(const json& j, StructuralState& s) {
  s.t = j.at("t").get<std::size_t>();
  s.recent = detail::reals_from_json(j.at("recent"));
  s.r_hist = detail::reals_from_json(j.at("r_hist"));
  s.e_hist = detail::reals_from_json(j.at("e_hist"));
}

inline void to_json(json& j, const StructuralModel& m) {
  j = json{{"p", m.p},
           {"q", m.q},
           {"phi", detail::reals_to_json(m.phi)},
           {"omega", detail::reals_to_json(m.omega)},
           {"theta", detail::reals_to_json(m.theta)},
           {"frequencies", detail::reals_to_json(m.frequencies)},
           {"intercept", detail::real_to_json(m.intercept)},
           {"d", m.d},
           {"log_scale", m.log_scale},
           {"log_offset", detail::real_to_json(m.log_offset)},
           {"sigma2", detail::real_to_json(m.sigma2)},
           {"train_mean", detail::real_to_json(m.train_mean)},
           {"transformed_mean", detail::real_to_json(m.transformed_mean)},
           {"residuals", detail::reals_to_json(m.residuals)},
           {"ar_stationary", m.ar_stationary},
           {"n_train", m.n_train},
           {"end_state", m.end_state}};
}

inline void from_json(const json& j, StructuralModel& m) {
  m.p = j.at("p").get<int>();
  m.q = j.at("q").get<int>();
  m.phi = detail::reals_from_json(j.at("phi"));
  m.omega = detail::reals_from_json(j.at("omega"));
  m.theta = detail::reals_from_json(j.at("theta"));
  m.frequencies = detail::reals_from_json(j.at("frequencies"));
  m.intercept = detail::real_from_json(j.at("intercept"));
  m.d = j.at("d").get<int>();
  m.log_scale = j.at("log_scale").get<bool>();
  m.log_offset = detail::real_from_json(j.at("log_offset"));
  m.sigma2 = detail::real_from_json(j.at("sigma2"));
  m.train_mean = detail::real_from_json(j.at("train_mean"));
  m.transformed_mean = detail::real_from_json(j.at("transformed_mean"));
  m.residuals = detail::reals_from_json(j.at("residuals"));
  m.ar_stationary = j.at("ar_stationary").get<bool>();
  m.n_train = j.at("n_train").get<std::size_t>();
  m.end_state = j.at("end_state").get<StructuralState>();
}

inline void to_json(json& j, const StateSpaceModel& m) {
  j = json{{"state_dim", m.state_dim},
           {"A", detail::matrix_to_json(m.A)},
           {"C", detail::matrix_to_json(m.C)},
           {"Q", detail::matrix_to_json(m.Q)},
           {"R", detail::real_to_json(m.R)},
           {"x0", detail::vector_to_json(m.x0)},
           {"P0", detail::matrix_to_json(m.P0)},
           {"forgetting", m.forgetting},
           {"eta_var_floor", detail::real_to_json(m.eta_var_floor)},
           {"stats_burn_in", m.stats_burn_in},
           {"log_scale", m.log_scale},
           {"log_offset", detail::real_to_json(m.log_offset)},
           {"center", detail::real_to_json(m.center)},
           {"unit", detail::real_to_json(m.unit)},
           {"noise_ratio", detail::real_to_json(m.noise_ratio)},
           {"n_train", m.n_train}};
}

inline void from_json(const json& j, StateSpaceModel& m) {
  m.state_dim = j.at("state_dim").get<int>();
  m.A = detail::matrix_from_json(j.at("A"));
  m.C = detail::matrix_from_json(j.at("C"));
  m.Q = detail::matrix_from_json(j.at("Q"));
  m.R = detail::real_from_json(j.at("R"));
  m.x0 = detail::vector_from_json(j.at("x0"));
  m.P0 = detail::matrix_from_json(j.at("P0"));
  m.forgetting = j.at("forgetting").get<double>();
  m.eta_var_floor = detail::real_from_json(j.at("eta_var_floor"));
  m.stats_burn_in = j.at("stats_burn_in").get<std::size_t>();
  m.log_scale = j.at("log_scale").get<bool>();
  m.log_offset = detail::real_from_json(j.at("log_offset"));
  m.center = detail::real_from_json(j.at("center"));
  m.unit = detail::real_from_json(j.at("unit"));
  m.noise_ratio = detail::real_from_json(j.at("noise_ratio"));
  m.n_train = j.at("n_train").get<std::size_t>();
}

inline void to_json(json& j, const FilterState& s) {
  j = json{{"x_prior", detail::vector_to_json(s.x_prior)},
           {"x_post", detail::vector_to_json(s.x_post)},
           {"P_prior", detail::matrix_to_json(s.P_prior)},
           {"P_post", detail::matrix_to_json(s.P_post)},
           {"eta", detail::real_to_json(s.eta)},
           {"eta_mean", detail::real_to_json(s.eta_mean)},
           {"eta_var", detail::real_to_json(s.eta_var)},
           {"weight", detail::real_to_json(s.weight)},
           {"m2", detail::real_to_json(s.m2)},
           {"innovation", detail::real_to_json(s.innovation)},
           {"innovation_var", detail::real_to_json(s.innovation_var)},
           {"steps", s.steps}};
}

inline void from_json(const json& j, FilterState& s) {
  s.x_prior = detail::vector_from_json(j.at("x_prior"));
  s.x_post = detail::vector_from_json(j.at("x_post"));
  s.P_prior = detail::matrix_from_json(j.at("P_prior"));
  s.P_post = detail::matrix_from_json(j.at("P_post"));
  s.eta = detail::real_from_json(j.at("eta"));
  s.eta_mean = detail::real_from_json(j.at("eta_mean"));
  s.eta_var = detail::real_from_json(j.at("eta_var"));
  s.weight = detail::real_from_json(j.at("weight"));
  s.m2 = detail::real_from_json(j.at("m2"));
  s.innovation = detail::real_from_json(j.at("innovation"));
  s.innovation_var = detail::real_from_json(j.at("innovation_var"));
  s.steps = j.at("steps").get<std::size_t>();
}

inline void to_json(json& j, const TrainedModel& m) {
  j = json{{"config", m.config},
           {"profile", m.profile},
           {"method", to_string(m.method())},
           {"first_index", m.first_index},
           {"n_train", m.n_train}};
  if (m.structural) j["structural"] = *m.structural;
  if (m.filtering) {
    j["filtering"] = *m.filtering;
    j["filter_end_state"] = m.filter_end_state;
  }
}

inline void from_json(const json& j, TrainedModel& m) {
  m = TrainedModel{};
  m.config = j.at("config").get<ModelConfig>();
  m.profile = j.at("profile").get<DataProfile>();
  m.first_index = j.at("first_index").get<std::size_t>();
  m.n_train = j.at("n_train").get<std::size_t>();
  if (j.contains("structural")) m.structural = j["structural"].get<StructuralModel>();
  if (j.contains("filtering")) {
    m.filtering = j["filtering"].get<StateSpaceModel>();
    m.filter_end_state = j.at("filter_end_state").get<FilterState>();
  }
  if (!m.structural && !m.filtering) throw Error(ErrorKind::InvalidArgument, "model payload without parameters");
}

inline void to_json(json& j, const ScoringState& s) {
  j = json{{"structural", s.structural}, {"filter", s.filter}, {"absorbed_run", s.absorbed_run}};
}

inline void from_json(const json& j, ScoringState& s) {
  s.structural = j.at("structural").get<StructuralState>();
  s.filter = j.at("filter").get<FilterState>();
  s.absorbed_run = j.at("absorbed_run").get<std::size_t>();
}

inline void to_json(json& j, const Trial& t) { j = json{{"config", t.config}, {"cost", detail::real_to_json(t.cost)}}; }

inline void from_json(const json& j, Trial& t) {
  t.config = j.at("config").get<ModelConfig>();
  t.cost = detail::real_from_json(j.at("cost"));
}

inline void to_json(json& j, const TuneResult& r) {
  j = json{{"best_config", r.best_config},
           {"best_cost", detail::real_to_json(r.best_cost)},
           {"seed", r.seed},
           {"trials", r.trials}};
}

inline void from_json(const json& j, TuneResult& r) {
  r.best_config = j.at("best_config").get<ModelConfig>();
  r.best_cost = detail::real_from_json(j.at("best_cost"));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.trials = j.at("trials").get<std::vector<Trial>>();
}

inline void to_json(json& j, const HealthSnapshot& s) {
  j = json{{"metric_id", s.metric_id},
           {"timestamp", s.timestamp},
           {"mv_avg", detail::real_to_json(s.mv_avg)},
           {"em_avg", detail::real_to_json(s.em_avg)},
           {"anomaly_rate", s.anomaly_rate},
           {"consecutive_anomalies", s.consecutive_anomalies},
           {"coefficient_of_variation", detail::real_to_json(s.coefficient_of_variation)},
           {"model_age_fraction", s.model_age_fraction},
           {"training_failed", s.training_failed},
           {"sample_size", s.sample_size},
           {"sufficient", s.sufficient},
           {"health", to_string(s.health)}};
}

inline void from_json(const json& j, HealthSnapshot& s) {
  s.metric_id = j.at("metric_id").get<std::string>();
  s.timestamp = j.at("timestamp").get<std::int64_t>();
  s.mv_avg = detail::real_from_json(j.at("mv_avg"));
  s.em_avg = detail::real_from_json(j.at("em_avg"));
  s.anomaly_rate = j.at("anomaly_rate").get<double>();
  s.consecutive_anomalies = j.at("consecutive_anomalies").get<std::size_t>();
  s.coefficient_of_variation = detail::real_from_json(j.at("coefficient_of_variation"));
  s.model_age_fraction = j.at("model_age_fraction").get<double>();
  s.training_failed = j.at("training_failed").get<bool>();
  s.sample_size = j.at("sample_size").get<std::size_t>();
  s.sufficient = j.at("sufficient").get<bool>();
  s.health = health_from_string(j.at("health").get<std::string>());
}

inline json curve_to_json(const Curve& c) {
  json a = json::array();
  for (const auto& p : c) a.push_back({detail::real_to_json(p.x), detail::real_to_json(p.y)});
  return a;
}

}  // namespace autoad
