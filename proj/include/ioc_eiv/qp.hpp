#pragma once

#include "ioc_eiv/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ioc_eiv {

/// Strictly convex quadratic program
///
///   minimize    1/2 z^T H z + c^T z
///   subject to  Aeq z  = beq
///               Ain z <= bin
///
/// Empty constraint blocks may be left default-constructed.
struct Qp {
  Matrix H;
  Vector c;
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;

  Index dim() const { return H.rows(); }
};

enum class QpStatus { optimal, infeasible, iteration_limit };

const char* to_string(QpStatus status);

struct QpSolution {
  Vector z;
  // Inequality rows held at equality by the final working set, in the order
  // they were added.
  std::vector<Index> active_set;
  // Lagrangian 1/2 z'Hz + c'z + y'(Aeq z - beq) + mu'(Ain z - bin), mu >= 0.
  Vector eq_multipliers;
  Vector ineq_multipliers;
  QpStatus status = QpStatus::infeasible;
  int iterations = 0;
  double objective = 0.0;
  // Row that could not be satisfied when status == infeasible.
  std::optional<Index> blocking_row;
  bool blocking_row_is_equality = false;
};

struct QpOptions {
  // A row counts as violated when a z - b > feasibility_tol * (1 + |b|).
  double feasibility_tol = 1e-9;
};

/// Dual active-set method (Goldfarb-Idnani). Starts from the unconstrained
/// minimizer, adds equality rows, then repeatedly adds the most violated
/// inequality (lowest index on ties), dropping rows whose multipliers would
/// turn negative. At most 100 * dim iterations.
///
/// `warm_start` lists inequality rows believed active. If the equality-
/// constrained solution on that set is primal and dual feasible it is returned
/// directly; otherwise the solve restarts cold, so the minimizer is the same
/// either way.
///
/// H must be symmetric positive definite (one roundoff-level regularization is
/// attempted); otherwise NotPositiveDefinite is thrown.
QpSolution solve_qp(const Qp& qp, std::optional<std::span<const Index>> warm_start = std::nullopt,
                    const QpOptions& options = {});

double qp_objective(const Qp& qp, const Vector& z);

/// Largest of stationarity, primal violation, dual violation and
/// complementarity for a candidate solution.
double qp_kkt_residual(const Qp& qp, const QpSolution& sol);

}  // namespace ioc_eiv
