#pragma once

#include "ioc_eiv/types.hpp"

#include <optional>
#include <vector>

namespace ioc_eiv {

/// x_{k+1} = A x_k + B u_k.
class LinearSystem {
 public:
  LinearSystem(Matrix a, Matrix b);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  Index n() const { return a_.rows(); }
  Index m() const { return b_.cols(); }

 private:
  Matrix a_;
  Matrix b_;
};

enum class FeatureKind { state, input };

/// (coordinate - target)^2 on one state or input coordinate.
struct QuadraticFeature {
  FeatureKind kind = FeatureKind::state;
  Index index = 0;
  double target = 0.0;
};

/// g(x, u) = Hx x + Hu u - h <= 0, one row per constraint.
struct PolytopicConstraints {
  Matrix Hx;
  Matrix Hu;
  Vector h;

  Index count() const { return h.size(); }
};

/// Appends one u_j^2 feature per input channel, in channel order.
std::vector<QuadraticFeature> with_input_features(std::vector<QuadraticFeature> features,
                                                  Index input_dim);

/// Linear dynamics, quadratic features and polytopic constraints over a
/// horizon of N steps. The objective is sum_{k<N} theta' phi(x_k, u_k);
/// constraints hold for k = 0..N, where the k = N rows drop their input part.
class ForwardProblem {
 public:
  ForwardProblem(LinearSystem system, std::vector<QuadraticFeature> features,
                 PolytopicConstraints constraints, int horizon, Vector x0,
                 std::optional<Vector> theta_true = std::nullopt);

  const LinearSystem& system() const { return system_; }
  const std::vector<QuadraticFeature>& features() const { return features_; }
  const PolytopicConstraints& constraints() const { return constraints_; }
  int horizon() const { return horizon_; }
  const Vector& x0() const { return x0_; }
  const std::optional<Vector>& theta_true() const { return theta_true_; }

  Index n() const { return system_.n(); }
  Index m() const { return system_.m(); }
  Index feature_count() const { return static_cast<Index>(features_.size()); }
  Index constraint_count() const { return constraints_.count(); }
  // Length of the stacked input sequence U.
  Index input_length() const { return m() * horizon_; }
  // Multipliers lambda_{i,k}, k = 0..N, stored at k * I + i.
  Index multiplier_count() const { return constraints_.count() * (horizon_ + 1); }
  // Length of beta = (theta, lambda).
  Index parameter_count() const { return feature_count() + multiplier_count(); }

 private:
  LinearSystem system_;
  std::vector<QuadraticFeature> features_;
  PolytopicConstraints constraints_;
  int horizon_;
  Vector x0_;
  std::optional<Vector> theta_true_;
};

/// States x_0..x_N; x_0 = x0.
std::vector<Vector> rollout(const LinearSystem& sys, const Vector& x0, const Vector& U, int horizon);

/// x_stack = Abar x0 + Bbar U with x_stack = (x_0, ..., x_N).
struct StackedDynamics {
  Matrix Abar;
  Matrix Bbar;
};

StackedDynamics stack_dynamics(const LinearSystem& sys, int horizon);

/// The stationarity residual grad_U L written as
///   J(U) beta = (sum_j theta_j Mj[j]) U + E_theta theta + J_lambda lambda.
struct BilinearStationarity {
  std::vector<Matrix> Mj;
  Matrix E_theta;
  Matrix J_lambda;

  Index input_length() const { return E_theta.rows(); }
  Index feature_count() const { return E_theta.cols(); }
  Index multiplier_count() const { return J_lambda.cols(); }
  Index parameter_count() const { return feature_count() + multiplier_count(); }

  /// sum_j theta_j Mj[j]
  Matrix M_beta(const Vector& theta) const;
  /// E_theta theta + J_lambda lambda, the U-independent part.
  Vector offset(const Vector& theta, const Vector& lambda) const;
  /// J(U) assembled column-wise: [Mj[j] U + E_theta(:, j) ... | J_lambda].
  Matrix jacobian(const Vector& U) const;
  /// (sum_j theta_j Mj[j]) U + offset; beta = (theta, lambda).
  Vector evaluate(const Vector& U, const Vector& beta) const;
};

BilinearStationarity build_stationarity(const ForwardProblem& fp);

/// All constraint rows as an affine map of U: g(U) = G U - b, length I(N+1),
/// row k * I + i.
struct StackedConstraints {
  Matrix G;
  Vector b;

  Vector values(const Vector& U) const { return G * U - b; }
};

StackedConstraints stack_constraints(const ForwardProblem& fp);

struct KktResidual {
  Vector stationarity;
  Vector complementarity;
  Vector primal_violation;
  Vector dual_violation;

  double max_abs() const;
};

KktResidual kkt_residual(const ForwardProblem& fp, const Vector& theta, const Vector& lambda,
                         const Vector& U);

/// Splits beta into (theta, lambda) using the problem's feature count.
Vector beta_theta(const Vector& beta, Index feature_count);
Vector beta_lambda(const Vector& beta, Index feature_count);
Vector make_beta(const Vector& theta, const Vector& lambda);

}  // namespace ioc_eiv
