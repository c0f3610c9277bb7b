#include "ioc_eiv/forward.hpp"

#include "ioc_eiv/error.hpp"
#include "ioc_eiv/linalg.hpp"
#include "ioc_eiv/qp.hpp"

#include <string>

namespace ioc_eiv::forward {

Solution solve(const ForwardProblem& fp, const Vector& theta,
               std::optional<std::span<const Index>> warm_start) {
  if (theta.size() != fp.feature_count()) throw DimensionError("forward::solve: theta has wrong length");
  if ((theta.array() <= 0.0).any())
    throw Error("forward::solve: theta must be elementwise positive");

  const BilinearStationarity bs = build_stationarity(fp);
  const StackedConstraints sc = stack_constraints(fp);

  // grad of sum theta' phi = M_beta U + E_theta theta.
  Qp qp;
  qp.H = linalg::symmetrize(bs.M_beta(theta));
  qp.c = bs.E_theta * theta;
  qp.Ain = sc.G;
  qp.bin = sc.b;
  const QpSolution sol = solve_qp(qp, warm_start);
  if (sol.status == QpStatus::infeasible) {
    throw InfeasibleError("forward problem infeasible (blocking constraint row " +
                          std::to_string(sol.blocking_row.value_or(-1)) + ")");
  }
  if (sol.status != QpStatus::optimal) throw SolverError("forward problem: QP iteration limit");

  Solution out;
  out.U = sol.z;
  out.lambda = sol.ineq_multipliers;
  out.active_set = sol.active_set;
  out.objective = objective(fp, theta, out.U);
  return out;
}

double objective(const ForwardProblem& fp, const Vector& theta, const Vector& U) {
  if (theta.size() != fp.feature_count()) throw DimensionError("objective: theta has wrong length");
  const std::vector<Vector> xs = rollout(fp.system(), fp.x0(), U, fp.horizon());
  double total = 0.0;
  for (int k = 0; k < fp.horizon(); ++k) {
    for (Index j = 0; j < fp.feature_count(); ++j) {
      const QuadraticFeature& f = fp.features()[static_cast<std::size_t>(j)];
      const double v = f.kind == FeatureKind::state ? xs[static_cast<std::size_t>(k)](f.index)
                                                    : U(k * fp.m() + f.index);
      total += theta(j) * (v - f.target) * (v - f.target);
    }
  }
  return total;
}

}  // namespace ioc_eiv::forward
