#include "ioc_eiv/kkt_baseline.hpp"

#include "ioc_eiv/error.hpp"
#include "ioc_eiv/qp.hpp"

#include <cmath>
#include <string>

namespace ioc_eiv::kkt {

Estimate kkt_ls(std::span<const Vector> demos, const ForwardProblem& fp,
                const std::optional<NormalizationRule>& norm, const Options& options) {
  if (!norm) {
    throw Error("kkt_ls: a normalization rule is required (the zero vector solves the "
                "unnormalized problem)");
  }
  if (demos.empty()) throw Error("kkt_ls: no demonstrations");
  const Index q = fp.feature_count();
  const Index len = fp.input_length();
  const BilinearStationarity bs = build_stationarity(fp);
  const StackedConstraints sc = stack_constraints(fp);

  struct DemoBlock {
    Matrix j_theta;
    std::vector<Index> active;
    Matrix j_active;
    Index offset = 0;
  };
  std::vector<DemoBlock> blocks;
  Index nvar = q;
  double feature_scale = 0.0;
  for (const Vector& u : demos) {
    if (u.size() != len) throw DimensionError("kkt_ls: demo has wrong length");
    DemoBlock blk;
    blk.j_theta = bs.jacobian(u).leftCols(q);
    feature_scale = std::max(feature_scale, blk.j_theta.cwiseAbs().maxCoeff());
    const Vector g = sc.values(u);
    for (Index r = 0; r < g.size(); ++r) {
      // A row with zero gradient cannot influence stationarity.
      if (sc.G.row(r).squaredNorm() == 0.0) continue;
      if (std::abs(g(r)) <= options.active_tol * (1.0 + std::abs(sc.b(r)))) blk.active.push_back(r);
    }
    blk.j_active.resize(len, static_cast<Index>(blk.active.size()));
    for (std::size_t a = 0; a < blk.active.size(); ++a)
      blk.j_active.col(static_cast<Index>(a)) = bs.J_lambda.col(blk.active[a]);
    blk.offset = nvar;
    nvar += static_cast<Index>(blk.active.size());
    blocks.push_back(std::move(blk));
  }
  if (!(feature_scale > 0.0)) throw Error("kkt_ls: all feature gradients are zero");

  Qp qp;
  qp.H = Matrix::Zero(nvar, nvar);
  qp.c = Vector::Zero(nvar);
  for (const DemoBlock& blk : blocks) {
    const Index na = blk.j_active.cols();
    qp.H.topLeftCorner(q, q) += 2.0 * blk.j_theta.transpose() * blk.j_theta;
    if (na == 0) continue;
    const Matrix cross = 2.0 * blk.j_theta.transpose() * blk.j_active;
    qp.H.block(0, blk.offset, q, na) += cross;
    qp.H.block(blk.offset, 0, na, q) += cross.transpose();
    qp.H.block(blk.offset, blk.offset, na, na) += 2.0 * blk.j_active.transpose() * blk.j_active;
  }
  // Stationarity least squares is only semidefinite in general; a tiny
  // Tikhonov term keeps the QP strictly convex.
  qp.H.diagonal().array() += 1e-12 * std::max(qp.H.trace() / static_cast<double>(nvar), 1e-300);

  qp.Aeq = Matrix::Zero(1, nvar);
  qp.Aeq.row(0).head(q) = norm->row(q).transpose();
  qp.beq = Vector::Constant(1, norm->value);
  qp.Ain = -Matrix::Identity(nvar, nvar);
  qp.bin = Vector::Zero(nvar);

  const QpSolution sol = solve_qp(qp);
  if (sol.status == QpStatus::infeasible)
    throw InfeasibleError("kkt_ls: normalization " + norm->describe() +
                          " is infeasible with theta >= 0");
  if (sol.status != QpStatus::optimal) throw SolverError("kkt_ls: QP iteration limit");

  Estimate est;
  est.theta = sol.z.head(q).cwiseMax(0.0);
  for (Index i = 0; i < q; ++i) {
    if (sol.ineq_multipliers(i) > 0.0) est.theta(i) = 0.0;
  }
  for (std::size_t d = 0; d < blocks.size(); ++d) {
    const DemoBlock& blk = blocks[d];
    Vector lambda = Vector::Zero(fp.multiplier_count());
    for (std::size_t a = 0; a < blk.active.size(); ++a) {
      const Index var = blk.offset + static_cast<Index>(a);
      lambda(blk.active[a]) = sol.ineq_multipliers(var) > 0.0 ? 0.0 : std::max(sol.z(var), 0.0);
    }
    const Vector r = blk.j_theta * est.theta + bs.J_lambda * lambda;
    est.residual += r.squaredNorm();
    est.lambdas.push_back(std::move(lambda));
  }
  return est;
}

Single kkt_single(const Vector& U, const ForwardProblem& fp,
                  const std::optional<NormalizationRule>& norm, const Options& options) {
  const Estimate est = kkt_ls(std::span<const Vector>(&U, 1), fp, norm, options);
  return {est.theta, est.lambdas.front()};
}

}  // namespace ioc_eiv::kkt
