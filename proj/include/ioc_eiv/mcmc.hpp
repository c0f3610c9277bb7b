#pragma once

#include "ioc_eiv/demos.hpp"
#include "ioc_eiv/model.hpp"
#include "ioc_eiv/normalization.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ioc_eiv::mcmc {

// ---------------------------------------------------------------------------
// Sampling primitives

/// mean + L z, L = cholesky(cov), z standard normal.
Vector sample_mvn(const Vector& mean, const Matrix& cov, Rng& rng);

/// Wishart(scale, nu) by the Bartlett decomposition; requires nu > dim - 1.
Matrix sample_wishart(const Matrix& scale, double nu, Rng& rng);

/// IW(W, nu): inverse of a Wishart(W^{-1}, nu) draw. Mean W / (nu - dim - 1).
Matrix sample_inverse_wishart(const Matrix& W, double nu, Rng& rng);

double log_mvn_density(const Vector& x, const Vector& mean, const Matrix& cov);

// ---------------------------------------------------------------------------
// Bayesian model of the demonstrations

/// U ~ N(U0, Sigma_U0), beta ~ N(beta0, Sigma_beta), Sigma_U ~ IW(W_U, m_U),
/// and the stationarity pseudo-observation Y_d = 0 ~ N(J(U) beta, Sigma_Y).
struct Priors {
  Vector U0;
  Matrix Sigma_U0;
  Vector beta0;
  Matrix Sigma_beta;
  Matrix W_U;
  double m_U = 0.0;
  Matrix Sigma_Y;

  void validate(Index input_length, Index parameter_count) const;
};

/// Data-driven defaults: U0 = sample mean, Sigma_U0 = 10 tr(S)/(mN) I,
/// beta0 = kkt_single(U0), Sigma_beta = 100 diag(max(beta0^2, 1)),
/// W_U = diag(S), m_U = mN + 2, Sigma_Y = sigma_y I. Variances are floored at
/// 1e-8 * max(1, mean(U0^2)) so noiseless demo sets still give SPD priors.
Priors default_priors(const DemoSet& ds, const ForwardProblem& fp, const NormalizationRule& norm,
                      double sigma_y = 1e-2);

struct Gaussian {
  Vector mean;
  Matrix cov;
};

struct InverseWishart {
  Matrix scale;
  double dof = 0.0;
};

/// beta | U, Y: D stacked copies of the linear model 0 = J(U) beta + e.
Gaussian full_conditional_beta(Index demo_count, const Matrix& jacobian, const Priors& priors);
Gaussian full_conditional_beta(const DemoSet& ds, const Vector& U, const BilinearStationarity& bs,
                               const Priors& priors);

/// U | beta, Sigma_U, U_[1:D], Y for a stationarity map that is affine in U:
/// J(U) beta = M_beta U + offset.
Gaussian full_conditional_U(const DemoSet& ds, const Matrix& M_beta, const Vector& offset,
                            const Matrix& Sigma_U, const Priors& priors);
Gaussian full_conditional_U(const DemoSet& ds, const Vector& beta, const Matrix& Sigma_U,
                            const BilinearStationarity& bs, const Priors& priors);

/// Sigma_U | U, U_[1:D] = IW(W_U + sum_d (U_d - U)(U_d - U)', D + m_U).
InverseWishart full_conditional_SigmaU(const DemoSet& ds, const Vector& U, const Priors& priors);

// ---------------------------------------------------------------------------
// Chains

struct ChainState {
  Vector U;
  Vector beta;
  Matrix Sigma_U;
  int iteration = 0;
};

struct AcceptanceRates {
  double beta = 1.0;
  double U = 1.0;
  double Sigma_U = 1.0;
};

struct ChainOutput {
  std::vector<ChainState> samples;  // retained draws, oldest first
  AcceptanceRates acceptance;
  Vector mean_U;
  Vector mean_beta;
  Matrix mean_Sigma_U;
  // Batch-means Monte Carlo standard errors of the means.
  Vector mcse_U;
  Vector mcse_beta;
  std::vector<std::string> warnings;
};

struct GibbsOptions {
  int n_iter = 2000;
  int n_keep = 300;
  // Starting point; default is U = sample mean, beta = kkt_single(U),
  // Sigma_U = I.
  std::optional<ChainState> init;
  // Scale rule for the default beta initializer; defaults to sum(theta) of
  // priors.beta0.
  std::optional<NormalizationRule> init_norm;
};

/// Gibbs sweep beta -> U -> Sigma_U using the closed-form conditionals
/// (linear dynamics, quadratic features, polytopic constraints).
ChainOutput gibbs_run(const DemoSet& ds, const ForwardProblem& fp, const Priors& priors,
                      const GibbsOptions& options, Rng& rng);

/// Writes iteration, beta_*, U_*, SigmaU_* (diagonal) for every retained draw.
void write_trace_csv(std::ostream& out, const ChainOutput& chain);

// ---------------------------------------------------------------------------
// Metropolis-Hastings

using LogDensity = std::function<double(const Vector&)>;

struct Proposal {
  std::function<Vector(const Vector& current, Rng& rng)> sample;
  // log q(to | from); only differences matter.
  std::function<double(const Vector& to, const Vector& from)> log_density;
};

/// Gaussian random walk N(current, cov); cov may be singular.
Proposal random_walk_proposal(Matrix cov);

/// Draws from N(mean, cov) regardless of the current point.
Proposal independence_proposal(Vector mean, Matrix cov);

struct MhStep {
  Vector next;
  bool accepted = false;
};

/// One Metropolis-Hastings transition. A proposal where the target is not
/// finite is rejected.
MhStep mh_step(const Vector& current, const LogDensity& log_target, const Proposal& proposal, Rng& rng);

/// J(U) for a possibly nonlinear stationarity map.
using JacobianFn = std::function<Matrix(const Vector& U)>;

/// Unnormalized log full conditional of U.
double log_conditional_U(const Vector& U, const DemoSet& ds, const Vector& beta, const Matrix& Sigma_U,
                         const JacobianFn& jacobian, const Priors& priors);

/// One random-walk MH step on U with proposal N(U, a Sigma_U).
MhStep mh_within_gibbs_U(const Vector& U, const DemoSet& ds, const Vector& beta, const Matrix& Sigma_U,
                         const JacobianFn& jacobian, const Priors& priors, double a, Rng& rng);

struct MhGibbsOptions {
  int n_iter = 2000;
  int n_keep = 300;
  double proposal_scale = 1e-5;
  // Default start: U = sample mean, beta = priors.beta0, Sigma_U = I.
  std::optional<ChainState> init;
};

/// Gibbs sweep where the U block uses mh_within_gibbs_U; beta and Sigma_U
/// keep their closed-form conditionals (J(U) stays linear in beta).
ChainOutput mh_within_gibbs_run(const DemoSet& ds, const JacobianFn& jacobian, const Priors& priors,
                                const MhGibbsOptions& options, Rng& rng);

}  // namespace ioc_eiv::mcmc
