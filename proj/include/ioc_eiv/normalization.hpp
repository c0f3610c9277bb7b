#pragma once

#include "ioc_eiv/types.hpp"

#include <string>

namespace ioc_eiv {

/// Fixes the scale of theta, which stationarity alone leaves free: either
/// sum_j theta_j = value, or theta_component = value.
struct NormalizationRule {
  enum class Kind { sum, component };

  Kind kind = Kind::sum;
  double value = 1.0;
  Index component = 0;

  static NormalizationRule sum(double value) { return {Kind::sum, value, 0}; }
  static NormalizationRule fixed_component(Index j, double value) {
    return {Kind::component, value, j};
  }

  /// Row r and right-hand side so that r . theta = value.
  Vector row(Index feature_count) const;

  /// theta scaled so that the rule holds (theta must not be orthogonal to the row).
  Vector rescale(const Vector& theta) const;

  std::string describe() const;
};

/// theta rescaled to the l1 norm of the reference; used for RMSE reporting.
Vector rescale_to_l1(const Vector& theta, const Vector& reference);

}  // namespace ioc_eiv
