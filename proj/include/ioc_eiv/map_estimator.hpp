#pragma once

#include "ioc_eiv/demos.hpp"
#include "ioc_eiv/mcmc.hpp"
#include "ioc_eiv/model.hpp"
#include "ioc_eiv/normalization.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ioc_eiv::map {

struct GibbsSettings {
  int n_iter = 2000;
  int n_keep = 300;
};

struct MapConfig {
  int max_outer_iters = 100;
  double cost_tol = 1e-9;  // relative decrease per outer iteration
  double active_tol = 1e-7;
  // Default: mcmc::default_priors(ds, fp, norm, sigma_y).
  std::optional<mcmc::Priors> priors;
  double sigma_y = 1e-2;
  GibbsSettings gibbs;
  // Scale of theta in the beta step; the prior alone lets beta shrink toward
  // zero, which trades stationarity for prior mismatch.
  NormalizationRule norm = NormalizationRule::sum(1.0);

  void validate() const;
};

struct GibbsSummary {
  mcmc::AcceptanceRates acceptance;
  Vector mean_beta;
  Vector mean_U;
  int retained = 0;
  std::vector<std::string> warnings;
};

struct MapResult {
  Vector theta;
  Vector lambda;
  Vector U_hat;
  Matrix Sigma_U_hat;
  // Cost after every half-step, starting with the first U step.
  std::vector<double> cost_trace;
  int outer_iterations = 0;
  bool converged = false;
  GibbsSummary gibbs_diag;
};

/// Negative log posterior without normalizing constants:
///   sum_d [(U - U_d)' Sigma_U^{-1} (U - U_d) + r' Sigma_Y^{-1} r]
///   + (U - U0)' Sigma_U0^{-1} (U - U0) + (beta - beta0)' Sigma_beta^{-1} (beta - beta0),
/// r = J(U) beta.
double map_cost(const Vector& U, const Vector& beta, const Matrix& Sigma_U, const DemoSet& ds,
                const BilinearStationarity& bs, const mcmc::Priors& priors);

/// Gibbs run for Sigma_U and the starting point, then alternating convex QPs
/// over beta (activity from g(U)) and U (activity from lambda). Returns the
/// lowest-cost iterate.
MapResult estimate(const DemoSet& ds, const ForwardProblem& fp, const MapConfig& cfg, Rng& rng);

struct ConsistencyReport {
  double cost_at_truth = 0.0;
  std::vector<double> epsilons;
  std::vector<double> fraction_higher;  // per epsilon
  int perturbations = 0;
};

/// Evaluates (1/D) sum_d [(U - U_d)' Sigma_U^{-1} (U - U_d) + r' Sigma_Y^{-1} r]
/// with Sigma_U the true noise covariance, at (U*, beta*) and at random
/// perturbations U* + eps |U*| v, beta* + eps |beta*| w (v, w uniform on the
/// unit sphere), and reports the fraction of perturbations costing more.
ConsistencyReport consistency_cost_check(const ForwardProblem& fp, const Vector& theta_star,
                                         const Vector& U_star, int demo_count, const NoiseSpec& noise,
                                         Rng& rng, int perturbations = 100,
                                         std::vector<double> epsilons = {0.01, 0.1},
                                         double sigma_y = 1e-2);

/// Noise covariance of the stacked input sequence for a noise spec.
Matrix stacked_noise_covariance(const NoiseSpec& noise, int horizon);

}  // namespace ioc_eiv::map
