#include "ioc_eiv/model.hpp"

#include "ioc_eiv/error.hpp"

#include <algorithm>
#include <string>

namespace ioc_eiv {

LinearSystem::LinearSystem(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() < 1 || a_.rows() != a_.cols())
    throw DimensionError("LinearSystem: A must be square with n >= 1");
  if (b_.rows() != a_.rows() || b_.cols() < 1)
    throw DimensionError("LinearSystem: B must be n x m with m >= 1");
}

std::vector<QuadraticFeature> with_input_features(std::vector<QuadraticFeature> features,
                                                  Index input_dim) {
  for (Index j = 0; j < input_dim; ++j) features.push_back({FeatureKind::input, j, 0.0});
  return features;
}

ForwardProblem::ForwardProblem(LinearSystem system, std::vector<QuadraticFeature> features,
                               PolytopicConstraints constraints, int horizon, Vector x0,
                               std::optional<Vector> theta_true)
    : system_(std::move(system)),
      features_(std::move(features)),
      constraints_(std::move(constraints)),
      horizon_(horizon),
      x0_(std::move(x0)),
      theta_true_(std::move(theta_true)) {
  if (features_.empty()) throw DimensionError("ForwardProblem: at least one feature is required");
  if (horizon_ < 1) throw DimensionError("ForwardProblem: horizon must be >= 1");
  if (x0_.size() != n()) throw DimensionError("ForwardProblem: x0 has wrong length");
  for (const QuadraticFeature& f : features_) {
    const Index bound = f.kind == FeatureKind::state ? n() : m();
    if (f.index < 0 || f.index >= bound)
      throw DimensionError("ForwardProblem: feature index " + std::to_string(f.index) +
                           " out of range");
  }
  const Index rows = constraints_.h.size();
  if (constraints_.Hx.rows() == 0 && rows == 0) constraints_.Hx = Matrix(0, n());
  if (constraints_.Hu.rows() == 0 && rows == 0) constraints_.Hu = Matrix(0, m());
  if (constraints_.Hx.rows() != rows || constraints_.Hu.rows() != rows)
    throw DimensionError("PolytopicConstraints: Hx, Hu and h disagree on the row count");
  if (constraints_.Hx.cols() != n() || constraints_.Hu.cols() != m())
    throw DimensionError("PolytopicConstraints: Hx must be I x n and Hu I x m");
  if (theta_true_) {
    if (theta_true_->size() != feature_count())
      throw DimensionError("ForwardProblem: theta_true has wrong length");
    if ((theta_true_->array() <= 0.0).any())
      throw Error("ForwardProblem: theta_true must be elementwise positive");
  }
}

std::vector<Vector> rollout(const LinearSystem& sys, const Vector& x0, const Vector& U, int horizon) {
  if (x0.size() != sys.n()) throw DimensionError("rollout: x0 has wrong length");
  if (U.size() != sys.m() * horizon) throw DimensionError("rollout: U has wrong length");
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(horizon) + 1);
  states.push_back(x0);
  for (int k = 0; k < horizon; ++k) {
    states.push_back(sys.A() * states.back() + sys.B() * U.segment(k * sys.m(), sys.m()));
  }
  return states;
}

StackedDynamics stack_dynamics(const LinearSystem& sys, int horizon) {
  const Index n = sys.n();
  const Index m = sys.m();
  StackedDynamics out;
  out.Abar = Matrix::Zero(n * (horizon + 1), n);
  out.Bbar = Matrix::Zero(n * (horizon + 1), m * horizon);
  out.Abar.topRows(n).setIdentity();
  for (int k = 1; k <= horizon; ++k) {
    out.Abar.middleRows(n * k, n) = sys.A() * out.Abar.middleRows(n * (k - 1), n);
    out.Bbar.middleRows(n * k, n) = sys.A() * out.Bbar.middleRows(n * (k - 1), n);
    out.Bbar.block(n * k, m * (k - 1), n, m) = sys.B();
  }
  return out;
}

Matrix BilinearStationarity::M_beta(const Vector& theta) const {
  Matrix out = Matrix::Zero(input_length(), input_length());
  for (std::size_t j = 0; j < Mj.size(); ++j) out += theta(static_cast<Index>(j)) * Mj[j];
  return out;
}

Vector BilinearStationarity::offset(const Vector& theta, const Vector& lambda) const {
  return E_theta * theta + J_lambda * lambda;
}

Matrix BilinearStationarity::jacobian(const Vector& U) const {
  Matrix j(input_length(), parameter_count());
  for (std::size_t f = 0; f < Mj.size(); ++f) {
    const Index c = static_cast<Index>(f);
    j.col(c) = Mj[f] * U + E_theta.col(c);
  }
  j.rightCols(multiplier_count()) = J_lambda;
  return j;
}

Vector BilinearStationarity::evaluate(const Vector& U, const Vector& beta) const {
  const Vector theta = beta.head(feature_count());
  const Vector lambda = beta.tail(multiplier_count());
  return M_beta(theta) * U + offset(theta, lambda);
}

BilinearStationarity build_stationarity(const ForwardProblem& fp) {
  const StackedDynamics sd = stack_dynamics(fp.system(), fp.horizon());
  const Index n = fp.n();
  const Index m = fp.m();
  const Index len = fp.input_length();
  const int N = fp.horizon();

  BilinearStationarity bs;
  bs.E_theta = Matrix::Zero(len, fp.feature_count());
  for (Index j = 0; j < fp.feature_count(); ++j) {
    const QuadraticFeature& f = fp.features()[static_cast<std::size_t>(j)];
    Matrix mj = Matrix::Zero(len, len);
    Vector e = Vector::Zero(len);
    // Objective runs over k = 0..N-1; x_0 carries no U dependence.
    for (int k = 0; k < N; ++k) {
      if (f.kind == FeatureKind::state) {
        const Vector row = sd.Bbar.row(n * k + f.index).transpose();
        const double free = sd.Abar.row(n * k + f.index).dot(fp.x0()) - f.target;
        mj.noalias() += 2.0 * row * row.transpose();
        e += 2.0 * free * row;
      } else {
        const Index c = m * k + f.index;
        mj(c, c) += 2.0;
        e(c) -= 2.0 * f.target;
      }
    }
    bs.Mj.push_back(std::move(mj));
    bs.E_theta.col(j) = e;
  }
  bs.J_lambda = stack_constraints(fp).G.transpose();
  return bs;
}

StackedConstraints stack_constraints(const ForwardProblem& fp) {
  const StackedDynamics sd = stack_dynamics(fp.system(), fp.horizon());
  const PolytopicConstraints& pc = fp.constraints();
  const Index I = pc.count();
  const Index n = fp.n();
  const Index m = fp.m();
  const int N = fp.horizon();
  StackedConstraints out;
  out.G = Matrix::Zero(I * (N + 1), fp.input_length());
  out.b = Vector::Zero(I * (N + 1));
  for (int k = 0; k <= N; ++k) {
    const Matrix bk = sd.Bbar.middleRows(n * k, n);
    const Vector ak = sd.Abar.middleRows(n * k, n) * fp.x0();
    for (Index i = 0; i < I; ++i) {
      const Index r = k * I + i;
      out.G.row(r) = pc.Hx.row(i) * bk;
      // No u_N exists: terminal rows keep only their state part.
      if (k < N) out.G.block(r, m * k, 1, m) += pc.Hu.row(i);
      out.b(r) = pc.h(i) - pc.Hx.row(i).dot(ak);
    }
  }
  return out;
}

double KktResidual::max_abs() const {
  double v = 0.0;
  for (const Vector* block : {&stationarity, &complementarity, &primal_violation, &dual_violation}) {
    if (block->size() > 0) v = std::max(v, block->cwiseAbs().maxCoeff());
  }
  return v;
}

KktResidual kkt_residual(const ForwardProblem& fp, const Vector& theta, const Vector& lambda,
                         const Vector& U) {
  if (theta.size() != fp.feature_count()) throw DimensionError("kkt_residual: theta has wrong length");
  if (lambda.size() != fp.multiplier_count())
    throw DimensionError("kkt_residual: lambda has wrong length");
  if (U.size() != fp.input_length()) throw DimensionError("kkt_residual: U has wrong length");
  const BilinearStationarity bs = build_stationarity(fp);
  const Vector g = stack_constraints(fp).values(U);
  KktResidual r;
  r.stationarity = bs.M_beta(theta) * U + bs.offset(theta, lambda);
  r.complementarity = lambda.cwiseProduct(g);
  r.primal_violation = g.cwiseMax(0.0);
  r.dual_violation = (-lambda).cwiseMax(0.0);
  return r;
}

Vector beta_theta(const Vector& beta, Index feature_count) { return beta.head(feature_count); }

Vector beta_lambda(const Vector& beta, Index feature_count) {
  return beta.tail(beta.size() - feature_count);
}

Vector make_beta(const Vector& theta, const Vector& lambda) {
  Vector beta(theta.size() + lambda.size());
  beta << theta, lambda;
  return beta;
}

}  // namespace ioc_eiv
