#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "autoad/error.hpp"

namespace autoad {

enum class Method { structural, filtering };

constexpr std::string_view to_string(Method m) { return m == Method::structural ? "structural" : "filtering"; }

inline Method method_from_string(std::string_view s) {
  if (s == "structural") return Method::structural;
  if (s == "filtering") return Method::filtering;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

struct StructuralParams {
  int p = 1;  ///< AR order, 0..3
  int q = 0;  ///< MA order, 0..3
  int l = 0;  ///< Fourier terms, 0..l_max
  /// Simplex iteration cap for conditional sum-of-squares estimation.
  int max_iterations = 4000;

  bool operator==(const StructuralParams&) const = default;
};

struct FilteringParams {
  int state_dim = 1;        ///< 1 = local level, 2 = local linear trend
  double forgetting = 0.99; ///< residual-statistics forgetting factor in [0.9, 0.9999]

  bool operator==(const FilteringParams&) const = default;
};

/// Tunable configuration searched by the optimizer. Only the parameter block
/// matching `method` is active.
struct ModelConfig {
  /// Train only on data at or after this grid index.
  std::optional<std::size_t> truncate_at;
  double max_missing_fraction = 0.2;
  bool log_scale = false;
  Method method = Method::structural;
  StructuralParams structural{};
  FilteringParams filtering{};
  double decision_threshold = 0.99;

  void validate() const {
    if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "max_missing_fraction must lie in [0,1]");
    if (!(decision_threshold > 0.0 && decision_threshold < 1.0))
      throw Error(ErrorKind::InvalidArgument, "decision_threshold must lie in (0,1)");
    if (method == Method::structural) {
      if (structural.p < 0 || structural.p > 3 || structural.q < 0 || structural.q > 3 || structural.l < 0)
        throw Error(ErrorKind::InvalidArgument, "structural orders out of bounds");
    } else {
      if (filtering.state_dim < 1 || filtering.state_dim > 2)
        throw Error(ErrorKind::InvalidArgument, "state_dim must be 1 or 2");
      if (!(filtering.forgetting >= 0.9 && filtering.forgetting <= 0.9999))
        throw Error(ErrorKind::InvalidArgument, "forgetting factor must lie in [0.9, 0.9999]");
    }
  }

  bool operator==(const ModelConfig& o) const {
    if (truncate_at != o.truncate_at || max_missing_fraction != o.max_missing_fraction ||
        log_scale != o.log_scale || method != o.method || decision_threshold != o.decision_threshold)
      return false;
    return method == Method::structural ? structural == o.structural : filtering == o.filtering;
  }
};

}  // namespace autoad
