#pragma once

#include "ioc_eiv/demos.hpp"
#include "ioc_eiv/model.hpp"
#include "ioc_eiv/normalization.hpp"

#include <string>
#include <vector>

namespace ioc_eiv::tls {

struct InnerConfig {
  int max_iters = 100;
  double cost_tol = 1e-9;
  double active_tol = 1e-7;
  // Stationarity residual counted as zero by the hard path.
  double stationarity_tol = 1e-9;
};

struct TlsConfig {
  int max_outer_iters = 50;
  double sigma_tol = 1e-6;
  double ridge = 1e-8;
  InnerConfig inner;
  NormalizationRule norm = NormalizationRule::sum(1.0);
  std::vector<double> penalty_weights{1e2, 1e4, 1e6};
  // theta stays above floor_fraction * norm.value during refinement so the
  // forward problem remains strictly convex.
  double floor_fraction = 1e-9;

  void validate() const;
};

enum class InnerPath { hard, penalty };
const char* to_string(InnerPath path);

struct InnerResult {
  Vector U_hat;
  Vector theta;
  Vector lambda;
  double cost = 0.0;
  InnerPath path = InnerPath::hard;
  // Objective sum_d (U - U_d)' Sigma_U^{-1} (U - U_d) at hard-feasible iterates.
  std::vector<double> trace;
  // Penalized costs, one list per weight of the homotopy (penalty path only).
  std::vector<std::vector<double>> penalty_traces;
  std::string note;
};

/// Minimizes sum_d (U - U_d)' Sigma_U^{-1} (U - U_d) subject to J(U) beta = 0,
/// primal and dual feasibility and complementarity, with theta scaled by
/// cfg.norm. Tries the bilinear alternation with the hard constraint first;
/// if a block step is infeasible it runs the penalty homotopy instead. Both
/// paths end by projecting onto the forward solution for theta and refining
/// theta there, so J(U_hat) beta = 0 holds exactly.
InnerResult tls_inner(const DemoSet& ds, const ForwardProblem& fp, const Matrix& Sigma_U, const TlsConfig& cfg,
                      const Vector& init_U, const Vector& init_beta);

/// The U half-step with beta fixed: minimize the data term subject to
/// M_beta U + offset = 0 and the activity pattern of lambda.
Vector tls_u_step(const DemoSet& ds, const ForwardProblem& fp, const Matrix& Sigma_U, const Vector& beta);

struct OuterRecord {
  double cost = 0.0;
  double sigma_delta = 0.0;
  InnerPath path = InnerPath::hard;
};

struct TlsResult {
  Vector theta;
  Vector lambda;
  Vector U_hat;
  Matrix Sigma_U_hat;
  std::vector<Vector> residuals;  // r_d = U_d - U_hat
  std::vector<OuterRecord> outer_trace;
  std::vector<std::vector<double>> inner_traces;  // one per outer iteration
  bool converged = false;
};

/// Alternates Sigma_U = (1/D) sum_d (U - U_d)(U - U_d)' + ridge I with
/// tls_inner, starting from U = sample mean and beta = kkt_single(U).
TlsResult estimate(const DemoSet& ds, const ForwardProblem& fp, const TlsConfig& cfg);

/// sum_d r_d' Sigma_U^{-1} r_d.
double residual_cost(const std::vector<Vector>& residuals, const Matrix& Sigma_U);

}  // namespace ioc_eiv::tls
