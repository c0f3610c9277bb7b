#pragma once

// Convex half-steps shared by the MAP and TLS alternations.

#include "ioc_eiv/model.hpp"
#include "ioc_eiv/normalization.hpp"
#include "ioc_eiv/qp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ioc_eiv::detail {

/// Cost of (U, beta):
///   sum_d (U - U_d)' Su (U - U_d) + D r' Wy r + prior terms,  r = J(U) beta,
/// with Su = Sigma_U^{-1} and Wy the stationarity weight.
struct BlockProblem {
  const ForwardProblem* fp = nullptr;
  BilinearStationarity bs;
  StackedConstraints sc;
  const std::vector<Vector>* demos = nullptr;
  Vector demo_sum;
  Matrix Su;
  Matrix Wy;
  // Gaussian priors; empty matrices mean "absent".
  Vector U0;
  Matrix Su0;
  Vector beta0;
  Matrix Sbeta;
  NormalizationRule norm;

  BlockProblem(const ForwardProblem& fp, const std::vector<Vector>& demos, NormalizationRule norm);

  double D() const { return static_cast<double>(demos->size()); }
  double data_cost(const Vector& U) const;
  double stationarity_cost(const Vector& U, const Vector& beta) const;
  double prior_cost(const Vector& U, const Vector& beta) const;
  double cost(const Vector& U, const Vector& beta) const {
    return data_cost(U) + stationarity_cost(U, beta) + prior_cost(U, beta);
  }
};

/// Rows with a nonzero gradient and |g| <= tol (1 + |b|); violated rows too
/// when include_violated is set.
std::vector<Index> near_active_rows(const StackedConstraints& sc, const Vector& U, double tol,
                                    bool include_violated);

/// Rows whose multiplier is strictly positive.
std::vector<Index> positive_rows(const Vector& lambda);

/// Minimizes the cost over beta with U fixed; lambda is free (>= 0) only on
/// `free_rows`, theta >= 0 and theta obeys the normalization. Throws
/// InfeasibleError naming the rule.
Vector beta_step(const BlockProblem& bp, const Vector& U, const std::vector<Index>& free_rows);

struct UStepResult {
  Vector U;
  std::vector<Index> active;  // rows binding at U (equalities included)
};

/// Minimizes the cost over U with beta fixed: rows with lambda > 0 are held
/// at g = 0, all others satisfy g <= 0. Extra equality rows (Aeq U = beq) may
/// be appended. Throws InfeasibleError listing the equality set.
UStepResult u_step(const BlockProblem& bp, const Vector& beta, const Matrix& extra_Aeq = {},
                   const Vector& extra_beq = {}, const std::vector<Index>& warm = {});

std::string describe_rows(const std::vector<Index>& rows, Index constraint_count);

}  // namespace ioc_eiv::detail
