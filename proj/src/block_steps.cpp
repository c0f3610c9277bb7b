#include "block_steps.hpp"

#include "ioc_eiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ioc_eiv::detail {

BlockProblem::BlockProblem(const ForwardProblem& problem, const std::vector<Vector>& ds,
                           NormalizationRule rule)
    : fp(&problem),
      bs(build_stationarity(problem)),
      sc(stack_constraints(problem)),
      demos(&ds),
      norm(rule) {
  if (ds.empty()) throw Error("no demonstrations");
  const Index n = problem.input_length();
  demo_sum = Vector::Zero(n);
  for (const auto& u : ds) {
    if (u.size() != n) throw DimensionError("demo has the wrong length");
    demo_sum += u;
  }
}

double BlockProblem::data_cost(const Vector& U) const {
  double c = 0.0;
  for (const auto& u : *demos) {
    const Vector r = U - u;
    c += r.dot(Su * r);
  }
  return c;
}

double BlockProblem::stationarity_cost(const Vector& U, const Vector& beta) const {
  const Vector r = bs.evaluate(U, beta);
  return D() * r.dot(Wy * r);
}

double BlockProblem::prior_cost(const Vector& U, const Vector& beta) const {
  double c = 0.0;
  if (Su0.size() > 0) {
    const Vector r = U - U0;
    c += r.dot(Su0 * r);
  }
  if (Sbeta.size() > 0) {
    const Vector r = beta - beta0;
    c += r.dot(Sbeta * r);
  }
  return c;
}

std::vector<Index> near_active_rows(const StackedConstraints& sc, const Vector& U, double tol,
                                    bool include_violated) {
  const Vector g = sc.values(U);
  std::vector<Index> rows;
  for (Index r = 0; r < g.size(); ++r) {
    if (sc.G.row(r).squaredNorm() == 0.0) continue;
    const double t = tol * (1.0 + std::abs(sc.b(r)));
    if (std::abs(g(r)) <= t || (include_violated && g(r) > t)) rows.push_back(r);
  }
  return rows;
}

std::vector<Index> positive_rows(const Vector& lambda) {
  std::vector<Index> rows;
  for (Index r = 0; r < lambda.size(); ++r)
    if (lambda(r) > 0.0) rows.push_back(r);
  return rows;
}

std::string describe_rows(const std::vector<Index>& rows, Index constraint_count) {
  std::ostringstream os;
  os << "{";
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (a) os << ", ";
    os << "(i=" << rows[a] % constraint_count << ", k=" << rows[a] / constraint_count << ")";
  }
  os << "}";
  return os.str();
}

Vector beta_step(const BlockProblem& bp, const Vector& U, const std::vector<Index>& free_rows) {
  const Index q = bp.bs.feature_count();
  const Index L = bp.bs.multiplier_count();
  const Index nf = static_cast<Index>(free_rows.size());
  const Index nvar = q + nf;

  // Selection of the free coordinates of beta.
  Matrix S = Matrix::Zero(q + L, nvar);
  S.topLeftCorner(q, q).setIdentity();
  for (Index a = 0; a < nf; ++a) S(q + free_rows[static_cast<std::size_t>(a)], q + a) = 1.0;

  const Matrix Js = bp.bs.jacobian(U) * S;
  Qp qp;
  qp.H = 2.0 * bp.D() * Js.transpose() * bp.Wy * Js;
  qp.c = Vector::Zero(nvar);
  if (bp.Sbeta.size() > 0) {
    qp.H += 2.0 * S.transpose() * bp.Sbeta * S;
    qp.c = -2.0 * S.transpose() * (bp.Sbeta * bp.beta0);
  }
  qp.H = 0.5 * (qp.H + qp.H.transpose());
  qp.H.diagonal().array() += 1e-12 * std::max(qp.H.trace() / static_cast<double>(nvar), 1e-300);
  qp.Aeq = Matrix::Zero(1, nvar);
  qp.Aeq.row(0).head(q) = bp.norm.row(q).transpose();
  qp.beq = Vector::Constant(1, bp.norm.value);
  qp.Ain = -Matrix::Identity(nvar, nvar);
  qp.bin = Vector::Zero(nvar);

  const QpSolution sol = solve_qp(qp);
  if (sol.status == QpStatus::infeasible)
    throw InfeasibleError("beta step: normalization " + bp.norm.describe() + " infeasible with theta >= 0");
  if (sol.status != QpStatus::optimal) throw SolverError("beta step: QP iteration limit");

  Vector z = sol.z.cwiseMax(0.0);
  for (Index i = 0; i < nvar; ++i)
    if (sol.ineq_multipliers(i) > 0.0) z(i) = 0.0;
  return S * z;
}

UStepResult u_step(const BlockProblem& bp, const Vector& beta, const Matrix& extra_Aeq,
                   const Vector& extra_beq, const std::vector<Index>& warm) {
  const Index q = bp.bs.feature_count();
  const Index n = bp.fp->input_length();
  const Vector theta = beta_theta(beta, q);
  const Vector lambda = beta_lambda(beta, q);
  const Matrix M = bp.bs.M_beta(theta);
  const Vector o = bp.bs.offset(theta, lambda);
  const double D = bp.D();

  Qp qp;
  qp.H = 2.0 * (D * bp.Su + D * M.transpose() * bp.Wy * M);
  qp.c = -2.0 * (bp.Su * bp.demo_sum) + 2.0 * D * M.transpose() * (bp.Wy * o);
  if (bp.Su0.size() > 0) {
    qp.H += 2.0 * bp.Su0;
    qp.c -= 2.0 * (bp.Su0 * bp.U0);
  }
  qp.H = 0.5 * (qp.H + qp.H.transpose());

  std::vector<Index> eq_rows;
  std::vector<Index> in_rows;
  for (Index r = 0; r < lambda.size(); ++r) {
    if (bp.sc.G.row(r).squaredNorm() == 0.0) {
      if (lambda(r) > 0.0 || bp.sc.b(r) < 0.0)
        throw InfeasibleError("U step: constant constraint row " + describe_rows({r}, bp.fp->constraint_count()) +
                              " cannot be satisfied");
      continue;
    }
    (lambda(r) > 0.0 ? eq_rows : in_rows).push_back(r);
  }
  const Index ne = static_cast<Index>(eq_rows.size()) + extra_Aeq.rows();
  qp.Aeq.resize(ne, n);
  qp.beq.resize(ne);
  for (std::size_t a = 0; a < eq_rows.size(); ++a) {
    qp.Aeq.row(static_cast<Index>(a)) = bp.sc.G.row(eq_rows[a]);
    qp.beq(static_cast<Index>(a)) = bp.sc.b(eq_rows[a]);
  }
  if (extra_Aeq.rows() > 0) {
    qp.Aeq.bottomRows(extra_Aeq.rows()) = extra_Aeq;
    qp.beq.tail(extra_Aeq.rows()) = extra_beq;
  }
  qp.Ain.resize(static_cast<Index>(in_rows.size()), n);
  qp.bin.resize(static_cast<Index>(in_rows.size()));
  for (std::size_t a = 0; a < in_rows.size(); ++a) {
    qp.Ain.row(static_cast<Index>(a)) = bp.sc.G.row(in_rows[a]);
    qp.bin(static_cast<Index>(a)) = bp.sc.b(in_rows[a]);
  }

  std::vector<Index> warm_local;
  for (Index r : warm) {
    auto it = std::find(in_rows.begin(), in_rows.end(), r);
    if (it != in_rows.end()) warm_local.push_back(static_cast<Index>(it - in_rows.begin()));
  }
  const QpSolution sol =
      warm_local.empty() ? solve_qp(qp) : solve_qp(qp, std::span<const Index>(warm_local));
  if (sol.status == QpStatus::infeasible)
    throw InfeasibleError("U step: constraint set with equalities " +
                          describe_rows(eq_rows, bp.fp->constraint_count()) + " is infeasible");
  if (sol.status != QpStatus::optimal) throw SolverError("U step: QP iteration limit");

  UStepResult res;
  res.U = sol.z;
  res.active = eq_rows;
  for (Index a : sol.active_set) res.active.push_back(in_rows[static_cast<std::size_t>(a)]);
  std::sort(res.active.begin(), res.active.end());
  return res;
}

}  // namespace ioc_eiv::detail
