#include "ioc_eiv/normalization.hpp"

#include "ioc_eiv/error.hpp"

#include <cmath>

namespace ioc_eiv {

Vector NormalizationRule::row(Index feature_count) const {
  if (kind == Kind::sum) return Vector::Ones(feature_count);
  if (component < 0 || component >= feature_count)
    throw DimensionError("normalization component out of range");
  Vector r = Vector::Zero(feature_count);
  r(component) = 1.0;
  return r;
}

Vector NormalizationRule::rescale(const Vector& theta) const {
  const double current = row(theta.size()).dot(theta);
  if (!(std::abs(current) > 0.0)) throw Error("cannot rescale theta: normalization row is zero");
  return theta * (value / current);
}

std::string NormalizationRule::describe() const {
  if (kind == Kind::sum) return "sum(theta) = " + std::to_string(value);
  return "theta[" + std::to_string(component) + "] = " + std::to_string(value);
}

Vector rescale_to_l1(const Vector& theta, const Vector& reference) {
  const double norm = theta.lpNorm<1>();
  if (!(norm > 0.0)) return theta;
  return theta * (reference.lpNorm<1>() / norm);
}

}  // namespace ioc_eiv
