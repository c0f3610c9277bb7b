#include "ioc_eiv/qp.hpp"

#include "ioc_eiv/error.hpp"
#include "ioc_eiv/linalg.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ioc_eiv {

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal:
      return "optimal";
    case QpStatus::infeasible:
      return "infeasible";
    case QpStatus::iteration_limit:
      return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Normalized {
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;
};

Normalized normalize(const Qp& qp) {
  const Index n = qp.dim();
  if (qp.H.cols() != n) throw DimensionError("qp: H is not square");
  if (qp.c.size() != n) throw DimensionError("qp: c has wrong length");
  Normalized out;
  out.Aeq = qp.Aeq.rows() == 0 ? Matrix(0, n) : qp.Aeq;
  out.beq = qp.Aeq.rows() == 0 ? Vector(0) : qp.beq;
  out.Ain = qp.Ain.rows() == 0 ? Matrix(0, n) : qp.Ain;
  out.bin = qp.Ain.rows() == 0 ? Vector(0) : qp.bin;
  if (out.Aeq.cols() != n || out.beq.size() != out.Aeq.rows())
    throw DimensionError("qp: equality block has inconsistent dimensions");
  if (out.Ain.cols() != n || out.bin.size() != out.Ain.rows())
    throw DimensionError("qp: inequality block has inconsistent dimensions");
  return out;
}

struct WorkingRow {
  Index row;
  bool equality;
  double sign;  // the row enters as sign * (a z - b)
  Vector a;     // sign * a
  Vector hinv_a;
  double u;
};

class DualActiveSet {
 public:
  DualActiveSet(const Qp& qp, const Normalized& nz, const Matrix& hinv, const QpOptions& opt)
      : qp_(qp), nz_(nz), hinv_(hinv), opt_(opt) {}

  QpSolution run() {
    QpSolution sol;
    const Index n = qp_.dim();
    z_ = -(hinv_ * qp_.c);
    const int max_iter = static_cast<int>(100 * std::max<Index>(n, 1));

    for (Index i = 0; i < nz_.Aeq.rows(); ++i) {
      const Vector a = nz_.Aeq.row(i).transpose();
      const double b = nz_.beq(i);
      const double v = a.dot(z_) - b;
      const double sign = v >= 0.0 ? 1.0 : -1.0;
      const Vector as = sign * a;
      Step st = step(as);
      if (st.dependent) {
        if (std::abs(v) <= opt_.feasibility_tol * (1.0 + std::abs(b))) continue;  // redundant row
        sol.status = QpStatus::infeasible;
        sol.blocking_row = i;
        sol.blocking_row_is_equality = true;
        return finish(sol);
      }
      const double t = std::abs(v) / st.curvature;
      z_ += t * st.dz;
      for (std::size_t j = 0; j < work_.size(); ++j) work_[j].u -= t * st.r(static_cast<Index>(j));
      work_.push_back({i, true, sign, as, hinv_ * as, t});
    }

    int iter = 0;
    for (;;) {
      // Most violated inequality, scaled by row norm; strict comparison keeps
      // the lowest index on ties.
      Index p = -1;
      double worst = 0.0;
      for (Index i = 0; i < nz_.Ain.rows(); ++i) {
        if (in_working_set(i)) continue;
        const double b = nz_.bin(i);
        const double v = nz_.Ain.row(i).dot(z_) - b;
        if (v <= opt_.feasibility_tol * (1.0 + std::abs(b))) continue;
        const double scaled = v / std::max(nz_.Ain.row(i).norm(), 1e-300);
        if (scaled > worst) {
          worst = scaled;
          p = i;
        }
      }
      if (p < 0) {
        sol.status = QpStatus::optimal;
        sol.iterations = iter;
        return finish(sol);
      }

      const Vector ap = nz_.Ain.row(p).transpose();
      const double bp = nz_.bin(p);
      double up = 0.0;
      for (;;) {
        if (++iter > max_iter) {
          sol.status = QpStatus::iteration_limit;
          sol.iterations = iter;
          return finish(sol);
        }
        Step st = step(ap);
        double t1 = kInf;
        std::size_t drop = 0;
        for (std::size_t j = 0; j < work_.size(); ++j) {
          const double rj = st.r(static_cast<Index>(j));
          if (work_[j].equality || rj <= 0.0) continue;
          const double ratio = work_[j].u / rj;
          if (ratio < t1) {
            t1 = ratio;
            drop = j;
          }
        }
        const double t2 = st.dependent ? kInf : (ap.dot(z_) - bp) / st.curvature;
        if (!std::isfinite(t1) && !std::isfinite(t2)) {
          sol.status = QpStatus::infeasible;
          sol.blocking_row = p;
          sol.iterations = iter;
          return finish(sol);
        }
        const double t = std::min(t1, t2);
        if (std::isfinite(t2)) z_ += t * st.dz;
        for (std::size_t j = 0; j < work_.size(); ++j) work_[j].u -= t * st.r(static_cast<Index>(j));
        up += t;
        if (t2 <= t1) {
          work_.push_back({p, false, 1.0, ap, hinv_ * ap, up});
          break;
        }
        work_[drop].u = 0.0;
        work_.erase(work_.begin() + static_cast<std::ptrdiff_t>(drop));
      }
    }
  }

 private:
  struct Step {
    Vector dz;
    Vector r;
    double curvature = 0.0;
    bool dependent = false;
  };

  bool in_working_set(Index row) const {
    return std::any_of(work_.begin(), work_.end(),
                       [row](const WorkingRow& w) { return !w.equality && w.row == row; });
  }

  // Primal direction dz and dual change -r per unit increase of the new
  // multiplier, keeping working rows at equality.
  Step step(const Vector& ap) const {
    Step st;
    const Vector hap = hinv_ * ap;
    const double full = ap.dot(hap);
    const Index q = static_cast<Index>(work_.size());
    st.r = Vector::Zero(q);
    st.dz = -hap;
    if (q > 0) {
      Matrix k(q, q);
      Vector rhs(q);
      for (Index i = 0; i < q; ++i) {
        rhs(i) = work_[i].hinv_a.dot(ap);
        for (Index j = 0; j < q; ++j) k(i, j) = work_[i].a.dot(work_[j].hinv_a);
      }
      st.r = Eigen::LDLT<Matrix>(linalg::symmetrize(k)).solve(rhs);
      for (Index i = 0; i < q; ++i) st.dz += st.r(i) * work_[i].hinv_a;
    }
    st.curvature = -ap.dot(st.dz);
    st.dependent = !(st.curvature > 1e-12 * std::max(full, 1e-300));
    return st;
  }

  QpSolution& finish(QpSolution& sol) {
    sol.z = z_;
    sol.eq_multipliers = Vector::Zero(nz_.Aeq.rows());
    sol.ineq_multipliers = Vector::Zero(nz_.Ain.rows());
    for (const WorkingRow& w : work_) {
      if (w.equality) {
        sol.eq_multipliers(w.row) = w.sign * w.u;
      } else {
        sol.ineq_multipliers(w.row) = std::max(w.u, 0.0);
        sol.active_set.push_back(w.row);
      }
    }
    sol.objective = qp_objective(qp_, z_);
    return sol;
  }

  const Qp& qp_;
  const Normalized& nz_;
  const Matrix& hinv_;
  const QpOptions& opt_;
  Vector z_;
  std::vector<WorkingRow> work_;
};

std::optional<QpSolution> try_warm_start(const Qp& qp, const Normalized& nz, const Matrix& hinv,
                                         std::span<const Index> rows, const QpOptions& opt) {
  const Index n = qp.dim();
  const Index meq = nz.Aeq.rows();
  const Index nw = static_cast<Index>(rows.size());
  Matrix a(meq + nw, n);
  Vector b(meq + nw);
  a.topRows(meq) = nz.Aeq;
  b.head(meq) = nz.beq;
  for (Index k = 0; k < nw; ++k) {
    const Index r = rows[static_cast<std::size_t>(k)];
    if (r < 0 || r >= nz.Ain.rows()) return std::nullopt;
    a.row(meq + k) = nz.Ain.row(r);
    b(meq + k) = nz.bin(r);
  }
  Vector z;
  Vector u = Vector::Zero(meq + nw);
  if (a.rows() == 0) {
    z = -(hinv * qp.c);
  } else {
    const Matrix k = linalg::symmetrize(a * hinv * a.transpose());
    Eigen::LDLT<Matrix> ldlt(k);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    if (!(ldlt.vectorD().cwiseAbs().minCoeff() > 1e-12 * std::max(dmax, 1e-300))) return std::nullopt;
    u = -ldlt.solve(b + a * (hinv * qp.c));
    z = -(hinv * (qp.c + a.transpose() * u));
  }
  const double umax = u.size() ? std::max(1.0, u.cwiseAbs().maxCoeff()) : 1.0;
  for (Index k = 0; k < nw; ++k) {
    if (u(meq + k) < -1e-10 * umax) return std::nullopt;
  }
  for (Index i = 0; i < nz.Ain.rows(); ++i) {
    if (nz.Ain.row(i).dot(z) - nz.bin(i) > opt.feasibility_tol * (1.0 + std::abs(nz.bin(i))))
      return std::nullopt;
  }
  QpSolution sol;
  sol.z = z;
  sol.status = QpStatus::optimal;
  sol.eq_multipliers = u.head(meq);
  sol.ineq_multipliers = Vector::Zero(nz.Ain.rows());
  for (Index k = 0; k < nw; ++k) {
    const Index r = rows[static_cast<std::size_t>(k)];
    sol.ineq_multipliers(r) = std::max(u(meq + k), 0.0);
    sol.active_set.push_back(r);
  }
  sol.objective = qp_objective(qp, z);
  return sol;
}

}  // namespace

double qp_objective(const Qp& qp, const Vector& z) { return 0.5 * z.dot(qp.H * z) + qp.c.dot(z); }

QpSolution solve_qp(const Qp& qp, std::optional<std::span<const Index>> warm_start,
                    const QpOptions& options) {
  const Normalized nz = normalize(qp);
  const Matrix l = linalg::cholesky_regularized(linalg::symmetrize(qp.H));
  const Matrix hinv =
      linalg::symmetrize(linalg::cholesky_solve(l, Matrix(Matrix::Identity(qp.dim(), qp.dim()))));
  if (warm_start) {
    if (auto sol = try_warm_start(qp, nz, hinv, *warm_start, options)) return *sol;
  }
  DualActiveSet solver(qp, nz, hinv, options);
  return solver.run();
}

double qp_kkt_residual(const Qp& qp, const QpSolution& sol) {
  const Normalized nz = normalize(qp);
  const Vector& z = sol.z;
  Vector grad = qp.H * z + qp.c;
  if (nz.Aeq.rows() > 0) grad += nz.Aeq.transpose() * sol.eq_multipliers;
  if (nz.Ain.rows() > 0) grad += nz.Ain.transpose() * sol.ineq_multipliers;
  double res = grad.cwiseAbs().maxCoeff();
  if (nz.Aeq.rows() > 0) res = std::max(res, (nz.Aeq * z - nz.beq).cwiseAbs().maxCoeff());
  for (Index i = 0; i < nz.Ain.rows(); ++i) {
    const double g = nz.Ain.row(i).dot(z) - nz.bin(i);
    res = std::max(res, std::max(g, 0.0));
    res = std::max(res, std::max(-sol.ineq_multipliers(i), 0.0));
    res = std::max(res, std::abs(sol.ineq_multipliers(i) * g));
  }
  return res;
}

}  // namespace ioc_eiv
