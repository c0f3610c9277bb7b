#pragma once

#include "ioc_eiv/model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ioc_eiv::forward {

struct Solution {
  Vector U;
  Vector lambda;
  // Binding constraint rows (k * I + i).
  std::vector<Index> active_set;
  double objective = 0.0;
};

/// Optimal input sequence, multipliers and active set of the forward problem
/// for weights theta (elementwise > 0). Throws InfeasibleError when the
/// constraints admit no input sequence.
Solution solve(const ForwardProblem& fp, const Vector& theta,
               std::optional<std::span<const Index>> warm_start = std::nullopt);

/// sum_{k<N} theta' phi(x_k, u_k) along the rollout of U.
double objective(const ForwardProblem& fp, const Vector& theta, const Vector& U);

}  // namespace ioc_eiv::forward
