#include "ioc_eiv/tls_estimator.hpp"

#include "block_steps.hpp"
#include "ioc_eiv/error.hpp"
#include "ioc_eiv/forward.hpp"
#include "ioc_eiv/kkt_baseline.hpp"
#include "ioc_eiv/linalg.hpp"
#include "ioc_eiv/qp.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ioc_eiv::tls {

void TlsConfig::validate() const {
  if (max_outer_iters < 1 || inner.max_iters < 1) throw Error("iteration limits must be >= 1");
  if (!(sigma_tol > 0.0) || !(ridge > 0.0) || !(inner.cost_tol > 0.0) || !(inner.active_tol > 0.0) ||
      !(inner.stationarity_tol > 0.0))
    throw Error("tolerances and ridge must be positive");
  if (penalty_weights.empty()) throw Error("penalty homotopy needs at least one weight");
  for (double w : penalty_weights)
    if (!(w > 0.0)) throw Error("penalty weights must be positive");
  if (!(floor_fraction > 0.0)) throw Error("floor_fraction must be positive");
}

const char* to_string(InnerPath path) { return path == InnerPath::hard ? "hard" : "penalty"; }

double residual_cost(const std::vector<Vector>& residuals, const Matrix& Sigma_U) {
  const Matrix L = linalg::cholesky(Sigma_U);
  double c = 0.0;
  for (const auto& r : residuals) c += L.triangularView<Eigen::Lower>().solve(r).squaredNorm();
  return c;
}

namespace {

struct Infeasible {};

// argmin sum_d (U - U_d)' Su (U - U_d) s.t. Aeq U = beq, Ain U <= bin, by a
// null-space reduction, so redundant but consistent equalities are fine.
// Returns nullopt when the constraints cannot be met.
std::optional<Vector> constrained_projection(const Matrix& Su, const Vector& mean, const Matrix& Aeq,
                                             const Vector& beq, const Matrix& Ain, const Vector& bin,
                                             double tol) {
  const Index n = mean.size();
  Vector Up = Vector::Zero(n);
  Matrix Z = Matrix::Identity(n, n);
  if (Aeq.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Aeq);
    cod.setThreshold(1e-12);
    Up = cod.solve(beq);
    const double scale = 1.0 + beq.cwiseAbs().maxCoeff() + Aeq.cwiseAbs().maxCoeff() * Up.cwiseAbs().maxCoeff();
    if ((Aeq * Up - beq).cwiseAbs().maxCoeff() > tol * scale) return std::nullopt;
    const Index rank = cod.rank();
    Eigen::ColPivHouseholderQR<Matrix> qr(Aeq.transpose());
    Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
    Z = Q.rightCols(n - rank);
  }
  if (Z.cols() == 0) {
    if (Ain.rows() > 0 && ((Ain * Up - bin).array() > tol * (1.0 + bin.cwiseAbs().array())).any())
      return std::nullopt;
    return Up;
  }
  Qp qp;
  qp.H = linalg::symmetrize(2.0 * Z.transpose() * Su * Z);
  qp.c = 2.0 * Z.transpose() * (Su * (Up - mean));
  if (Ain.rows() > 0) {
    qp.Ain = Ain * Z;
    qp.bin = bin - Ain * Up;
  }
  const QpSolution sol = solve_qp(qp);
  if (sol.status != QpStatus::optimal) return std::nullopt;
  return Vector(Up + Z * sol.z);
}

struct HardStep {
  Vector U;
  bool ok = false;
};

HardStep hard_u_step(const detail::BlockProblem& bp, const Vector& beta, double tol) {
  const Index q = bp.bs.feature_count();
  const Vector theta = beta_theta(beta, q);
  const Vector lambda = beta_lambda(beta, q);
  std::vector<Index> eq_rows, in_rows;
  for (Index r = 0; r < lambda.size(); ++r) {
    if (bp.sc.G.row(r).squaredNorm() == 0.0) {
      if (lambda(r) > 0.0 || bp.sc.b(r) < 0.0) return {};
      continue;
    }
    (lambda(r) > 0.0 ? eq_rows : in_rows).push_back(r);
  }
  const Index n = bp.fp->input_length();
  const Matrix M = bp.bs.M_beta(theta);
  Matrix Aeq(n + static_cast<Index>(eq_rows.size()), n);
  Vector beq(Aeq.rows());
  Aeq.topRows(n) = M;
  beq.head(n) = -bp.bs.offset(theta, lambda);
  for (std::size_t a = 0; a < eq_rows.size(); ++a) {
    Aeq.row(n + Index(a)) = bp.sc.G.row(eq_rows[a]);
    beq(n + Index(a)) = bp.sc.b(eq_rows[a]);
  }
  Matrix Ain(static_cast<Index>(in_rows.size()), n);
  Vector bin(Ain.rows());
  for (std::size_t a = 0; a < in_rows.size(); ++a) {
    Ain.row(Index(a)) = bp.sc.G.row(in_rows[a]);
    bin(Index(a)) = bp.sc.b(in_rows[a]);
  }
  auto U = constrained_projection(bp.Su, bp.demo_sum / bp.D(), Aeq, beq, Ain, bin, tol);
  if (!U) return {};
  return {*U, true};
}

double stationarity_scale(const detail::BlockProblem& bp, const Vector& U, const Vector& beta) {
  return 1.0 + bp.bs.jacobian(U).cwiseAbs().maxCoeff() * beta.cwiseAbs().maxCoeff();
}

// Hard-constrained alternation. Returns false as soon as a block is infeasible.
bool hard_alternation(const detail::BlockProblem& bp, const TlsConfig& cfg, Vector& U, Vector& beta,
                      std::vector<double>& trace) {
  const double tol = cfg.inner.stationarity_tol;
  Vector b = detail::beta_step(bp, U, detail::near_active_rows(bp.sc, U, cfg.inner.active_tol, false));
  if (bp.bs.evaluate(U, b).cwiseAbs().maxCoeff() > tol * stationarity_scale(bp, U, b)) return false;
  HardStep hs = hard_u_step(bp, b, tol);
  if (!hs.ok) return false;
  U = hs.U;
  beta = b;
  trace.push_back(bp.data_cost(U));
  for (int it = 1; it < cfg.inner.max_iters; ++it) {
    std::vector<Index> rows = detail::near_active_rows(bp.sc, U, cfg.inner.active_tol, false);
    b = detail::beta_step(bp, U, rows);
    if (bp.bs.evaluate(U, b).cwiseAbs().maxCoeff() > tol * stationarity_scale(bp, U, b)) return false;
    hs = hard_u_step(bp, b, tol);
    if (!hs.ok) return false;
    const double c = bp.data_cost(hs.U);
    const double prev = trace.back();
    if (c > prev) break;  // keep the better iterate
    U = hs.U;
    beta = b;
    trace.push_back(c);
    if (prev - c <= cfg.inner.cost_tol * std::max(prev, 1e-300)) break;
  }
  return true;
}

void penalty_homotopy(detail::BlockProblem& bp, const TlsConfig& cfg, Vector& U, Vector& beta,
                      std::vector<std::vector<double>>& traces) {
  const Index n = bp.fp->input_length();
  bool first = true;
  detail::UStepResult us;
  for (double w : cfg.penalty_weights) {
    bp.Wy = w * Matrix::Identity(n, n);
    std::vector<double> trace;
    for (int it = 0; it < cfg.inner.max_iters; ++it) {
      const std::vector<Index> rows =
          first ? detail::near_active_rows(bp.sc, U, cfg.inner.active_tol, true) : us.active;
      first = false;
      beta = detail::beta_step(bp, U, rows);
      us = detail::u_step(bp, beta, {}, {}, us.active);
      U = us.U;
      const double c = bp.cost(U, beta);
      const bool stop = !trace.empty() && trace.back() - c <= cfg.inner.cost_tol * std::max(trace.back(), 1e-300);
      trace.push_back(c);
      if (stop) break;
    }
    traces.push_back(std::move(trace));
  }
}

// dU/dtheta of the forward solution on a fixed active set.
Matrix forward_sensitivity(const ForwardProblem& fp, const BilinearStationarity& bs, const StackedConstraints& sc,
                           const Vector& theta, const forward::Solution& sol) {
  const Index n = fp.input_length();
  const Index q = fp.feature_count();
  std::vector<Index> act;
  for (Index r : sol.active_set)
    if (sc.G.row(r).squaredNorm() > 0.0) act.push_back(r);
  const Index a = static_cast<Index>(act.size());
  Matrix K = Matrix::Zero(n + a, n + a);
  K.topLeftCorner(n, n) = bs.M_beta(theta);
  for (Index i = 0; i < a; ++i) {
    K.block(0, n + i, n, 1) = sc.G.row(act[std::size_t(i)]).transpose();
    K.block(n + i, 0, 1, n) = sc.G.row(act[std::size_t(i)]);
  }
  Matrix rhs = Matrix::Zero(n + a, q);
  for (Index j = 0; j < q; ++j) rhs.col(j).head(n) = -(bs.Mj[std::size_t(j)] * sol.U + bs.E_theta.col(j));
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
  return cod.solve(rhs).topRows(n);
}

struct Refined {
  Vector theta;
  forward::Solution sol;
};

// Gauss-Newton / Levenberg-Marquardt on theta -> data_cost(U(theta)), with
// U(theta) the forward optimum. Accepts only strict decreases.
Refined refine(const detail::BlockProblem& bp, const TlsConfig& cfg, Vector theta, std::vector<double>& trace) {
  const ForwardProblem& fp = *bp.fp;
  const Index q = fp.feature_count();
  const double floor = cfg.floor_fraction * std::abs(cfg.norm.value);
  theta = cfg.norm.rescale(theta.cwiseMax(floor));
  theta = theta.cwiseMax(floor);
  forward::Solution sol = forward::solve(fp, theta);
  double f = bp.data_cost(sol.U);
  trace.push_back(f);
  const Vector mean = bp.demo_sum / bp.D();
  double mu = 1e-3;
  for (int it = 0; it < cfg.inner.max_iters; ++it) {
    const Matrix S = forward_sensitivity(fp, bp.bs, bp.sc, theta, sol);
    const Vector grad = 2.0 * bp.D() * S.transpose() * (bp.Su * (sol.U - mean));
    Matrix Hgn = linalg::symmetrize(2.0 * bp.D() * S.transpose() * bp.Su * S);
    const double hscale = std::max(Hgn.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    for (int k = 0; k < 30 && !accepted; ++k) {
      Qp qp;
      qp.H = Hgn;
      qp.H.diagonal() += mu * (Hgn.diagonal().array() + 1e-12 * hscale).matrix();
      qp.c = grad;
      qp.Aeq = cfg.norm.row(q).transpose();
      qp.beq = Vector::Constant(1, cfg.norm.value - cfg.norm.row(q).dot(theta));
      qp.Ain = -Matrix::Identity(q, q);
      qp.bin = theta - Vector::Constant(q, floor);
      const QpSolution step = solve_qp(qp);
      if (step.status != QpStatus::optimal) {
        mu *= 10.0;
        continue;
      }
      Vector cand = (theta + step.z).cwiseMax(floor);
      forward::Solution cs;
      try {
        cs = forward::solve(fp, cand, std::span<const Index>(sol.active_set));
      } catch (const Error&) {
        mu *= 10.0;
        continue;
      }
      const double fc = bp.data_cost(cs.U);
      if (fc < f) {
        const double prev = f;
        theta = cand;
        sol = std::move(cs);
        f = fc;
        trace.push_back(f);
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        if (prev - f <= cfg.inner.cost_tol * std::max(prev, 1e-300)) return {theta, sol};
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) break;
  }
  return {theta, sol};
}

detail::BlockProblem make_problem(const DemoSet& ds, const ForwardProblem& fp, const Matrix& Sigma_U,
                                  const TlsConfig& cfg) {
  detail::BlockProblem bp(fp, ds.demos, cfg.norm);
  bp.Su = linalg::spd_inverse(Sigma_U);
  bp.Wy = Matrix::Identity(fp.input_length(), fp.input_length());
  return bp;
}

Matrix residual_covariance(const DemoSet& ds, const Vector& U, double ridge) {
  const Index n = U.size();
  Matrix S = Matrix::Zero(n, n);
  for (const auto& u : ds.demos) {
    const Vector r = U - u;
    S.noalias() += r * r.transpose();
  }
  S /= static_cast<double>(ds.count());
  S.diagonal().array() += ridge;
  return linalg::symmetrize(S);
}

}  // namespace

Vector tls_u_step(const DemoSet& ds, const ForwardProblem& fp, const Matrix& Sigma_U, const Vector& beta) {
  TlsConfig cfg;
  const detail::BlockProblem bp = make_problem(ds, fp, Sigma_U, cfg);
  if (beta.size() != fp.parameter_count()) throw DimensionError("tls_u_step: beta has the wrong length");
  HardStep hs = hard_u_step(bp, beta, cfg.inner.stationarity_tol);
  if (!hs.ok) throw InfeasibleError("tls_u_step: stationarity and activity constraints are inconsistent");
  return hs.U;
}

InnerResult tls_inner(const DemoSet& ds, const ForwardProblem& fp, const Matrix& Sigma_U, const TlsConfig& cfg,
                      const Vector& init_U, const Vector& init_beta) {
  cfg.validate();
  if (init_U.size() != fp.input_length() || init_beta.size() != fp.parameter_count())
    throw DimensionError("tls_inner: initial point has the wrong size");
  detail::BlockProblem bp = make_problem(ds, fp, Sigma_U, cfg);
  const Index q = fp.feature_count();

  InnerResult res;
  Vector U = init_U;
  Vector beta = init_beta;
  std::vector<double> hard_trace;
  if (hard_alternation(bp, cfg, U, beta, hard_trace)) {
    res.path = InnerPath::hard;
  } else {
    res.path = InnerPath::penalty;
    U = init_U;
    beta = init_beta;
    penalty_homotopy(bp, cfg, U, beta, res.penalty_traces);
    res.note = "hard constraint infeasible for the initial activity pattern; used penalty homotopy";
  }

  Refined r = refine(bp, cfg, beta_theta(beta, q), res.trace);
  res.U_hat = r.sol.U;
  res.theta = r.theta;
  res.lambda = r.sol.lambda;
  res.cost = res.trace.back();
  return res;
}

TlsResult estimate(const DemoSet& ds, const ForwardProblem& fp, const TlsConfig& cfg) {
  cfg.validate();
  if (ds.count() < 2) throw Error("tls estimate needs at least two demonstrations");
  if (ds.length() != fp.input_length()) throw DimensionError("tls estimate: demo length does not match the problem");

  Vector U = sample_mean(ds);
  kkt::Single init = kkt::kkt_single(U, fp, cfg.norm);
  Vector beta = init.beta();

  TlsResult res;
  Matrix Sigma = residual_covariance(ds, U, cfg.ridge);
  for (int it = 0; it < cfg.max_outer_iters; ++it) {
    InnerResult in = tls_inner(ds, fp, Sigma, cfg, U, beta);
    U = in.U_hat;
    beta = make_beta(in.theta, in.lambda);
    res.theta = in.theta;
    res.lambda = in.lambda;
    Matrix next = residual_covariance(ds, U, cfg.ridge);
    const double delta = (next - Sigma).norm();
    res.outer_trace.push_back({in.cost, delta, in.path});
    res.inner_traces.push_back(std::move(in.trace));
    res.Sigma_U_hat = Sigma;
    Sigma = next;
    if (delta < cfg.sigma_tol) {
      res.converged = true;
      break;
    }
  }
  res.U_hat = U;
  res.residuals.reserve(ds.demos.size());
  for (const auto& u : ds.demos) res.residuals.push_back(u - U);
  return res;
}

}  // namespace ioc_eiv::tls
