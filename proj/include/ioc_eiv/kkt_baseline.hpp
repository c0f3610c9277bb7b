#pragma once

#include "ioc_eiv/model.hpp"
#include "ioc_eiv/normalization.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ioc_eiv::kkt {

struct Options {
  // A demo constraint row with |g| <= active_tol * (1 + |b|) may carry a
  // multiplier; every other multiplier is pinned to zero.
  double active_tol = 1e-6;
};

struct Estimate {
  Vector theta;
  std::vector<Vector> lambdas;  // one full-length multiplier vector per demo
  double residual = 0.0;        // sum_d ||J(U_d) beta_d||^2
};

/// Least-squares inverse KKT over all demos: shared theta >= 0, per-demo
/// multipliers >= 0 restricted to the demo's active rows, theta scale fixed by
/// `norm`. A missing rule is rejected: theta = lambda = 0 would be optimal.
Estimate kkt_ls(std::span<const Vector> demos, const ForwardProblem& fp,
                const std::optional<NormalizationRule>& norm, const Options& options = {});

struct Single {
  Vector theta;
  Vector lambda;

  Vector beta() const { return make_beta(theta, lambda); }
};

/// kkt_ls on a single input sequence.
Single kkt_single(const Vector& U, const ForwardProblem& fp,
                  const std::optional<NormalizationRule>& norm, const Options& options = {});

}  // namespace ioc_eiv::kkt
