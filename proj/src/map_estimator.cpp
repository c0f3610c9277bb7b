#include "ioc_eiv/map_estimator.hpp"

#include "block_steps.hpp"
#include "ioc_eiv/error.hpp"
#include "ioc_eiv/forward.hpp"
#include "ioc_eiv/linalg.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ioc_eiv::map {

void MapConfig::validate() const {
  if (max_outer_iters < 1) throw Error("max_outer_iters must be >= 1");
  if (!(cost_tol > 0.0) || !(active_tol > 0.0)) throw Error("tolerances must be positive");
  if (!(sigma_y > 0.0)) throw Error("sigma_y must be positive");
  if (gibbs.n_iter < 1 || gibbs.n_keep < 1 || gibbs.n_keep > gibbs.n_iter)
    throw Error("gibbs settings need 1 <= n_keep <= n_iter");
}

double map_cost(const Vector& U, const Vector& beta, const Matrix& Sigma_U, const DemoSet& ds,
                const BilinearStationarity& bs, const mcmc::Priors& priors) {
  const Matrix LU = linalg::cholesky(Sigma_U);
  const Matrix LY = linalg::cholesky(priors.Sigma_Y);
  const Vector r = bs.evaluate(U, beta);
  const double stat = LY.triangularView<Eigen::Lower>().solve(r).squaredNorm();
  double c = 0.0;
  for (const auto& u : ds.demos) c += LU.triangularView<Eigen::Lower>().solve(U - u).squaredNorm() + stat;
  c += linalg::cholesky(priors.Sigma_U0).triangularView<Eigen::Lower>().solve(U - priors.U0).squaredNorm();
  c += linalg::cholesky(priors.Sigma_beta).triangularView<Eigen::Lower>().solve(beta - priors.beta0).squaredNorm();
  return c;
}

MapResult estimate(const DemoSet& ds, const ForwardProblem& fp, const MapConfig& cfg, Rng& rng) {
  cfg.validate();
  if (ds.count() < 1) throw Error("map estimate: demo set is empty");
  if (ds.length() != fp.input_length()) throw DimensionError("map estimate: demo length does not match the problem");

  const mcmc::Priors priors = cfg.priors ? *cfg.priors : mcmc::default_priors(ds, fp, cfg.norm, cfg.sigma_y);
  priors.validate(fp.input_length(), fp.parameter_count());

  mcmc::GibbsOptions gopt;
  gopt.n_iter = cfg.gibbs.n_iter;
  gopt.n_keep = cfg.gibbs.n_keep;
  gopt.init_norm = cfg.norm;
  const mcmc::ChainOutput chain = mcmc::gibbs_run(ds, fp, priors, gopt, rng);

  MapResult res;
  res.Sigma_U_hat = chain.mean_Sigma_U;
  res.gibbs_diag = {chain.acceptance, chain.mean_beta, chain.mean_U, static_cast<int>(chain.samples.size()),
                    chain.warnings};

  detail::BlockProblem bp(fp, ds.demos, cfg.norm);
  bp.Su = linalg::spd_inverse(chain.mean_Sigma_U);
  bp.Wy = linalg::spd_inverse(priors.Sigma_Y);
  bp.U0 = priors.U0;
  bp.Su0 = linalg::spd_inverse(priors.Sigma_U0);
  bp.beta0 = priors.beta0;
  bp.Sbeta = linalg::spd_inverse(priors.Sigma_beta);

  // The chain mean need not be feasible, so the first beta step lets every
  // near-active or violated row carry a multiplier.
  Vector U = chain.mean_U;
  Vector beta = detail::beta_step(bp, U, detail::near_active_rows(bp.sc, U, cfg.active_tol, true));
  detail::UStepResult us = detail::u_step(bp, beta);
  U = us.U;

  double best = bp.cost(U, beta);
  res.cost_trace.push_back(best);
  Vector best_U = U;
  Vector best_beta = beta;
  res.outer_iterations = 1;

  for (int it = 2; it <= cfg.max_outer_iters; ++it) {
    const double prev = res.cost_trace.back();
    // Half-step on beta: multipliers only on rows binding at U.
    beta = detail::beta_step(bp, U, us.active);
    double c = bp.cost(U, beta);
    res.cost_trace.push_back(c);
    if (c < best) {
      best = c;
      best_U = U;
      best_beta = beta;
    }

    us = detail::u_step(bp, beta, {}, {}, us.active);
    U = us.U;
    c = bp.cost(U, beta);
    res.cost_trace.push_back(c);
    if (c < best) {
      best = c;
      best_U = U;
      best_beta = beta;
    }
    res.outer_iterations = it;
    if (prev - c <= cfg.cost_tol * std::max(std::abs(prev), 1e-300)) {
      res.converged = true;
      break;
    }
  }

  res.U_hat = best_U;
  res.theta = beta_theta(best_beta, fp.feature_count());
  res.lambda = beta_lambda(best_beta, fp.feature_count());
  return res;
}

Matrix stacked_noise_covariance(const NoiseSpec& noise, int horizon) {
  noise.validate();
  const Index m = noise.channels();
  Matrix step;
  switch (noise.kind) {
    case NoiseSpec::Kind::gaussian:
    case NoiseSpec::Kind::truncated_gaussian:
      step = noise.sigma_u;
      break;
    case NoiseSpec::Kind::uniform:
      step = (noise.halfwidth.array().square() / 3.0).matrix().asDiagonal();
      break;
  }
  Matrix out = Matrix::Zero(m * horizon, m * horizon);
  for (int k = 0; k < horizon; ++k) out.block(k * m, k * m, m, m) = step;
  return out;
}

namespace {

Vector unit_direction(Index n, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  do {
    for (Index i = 0; i < n; ++i) v(i) = z(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace

ConsistencyReport consistency_cost_check(const ForwardProblem& fp, const Vector& theta_star,
                                         const Vector& U_star, int demo_count, const NoiseSpec& noise,
                                         Rng& rng, int perturbations, std::vector<double> epsilons,
                                         double sigma_y) {
  if (demo_count < 1) throw Error("consistency check needs at least one demonstration");
  if (perturbations < 1) throw Error("consistency check needs at least one perturbation");
  const forward::Solution sol = forward::solve(fp, theta_star);
  const Vector beta_star = make_beta(theta_star, sol.lambda);

  NoiseSpec spec = noise;
  spec.seed = std::uniform_int_distribution<std::uint64_t>()(rng);
  const DemoSet ds = generate(U_star, spec, demo_count);

  Matrix Sigma_U = stacked_noise_covariance(noise, fp.horizon());
  // Zero noise: any SPD metric gives the same ordering of costs.
  if (Sigma_U.diagonal().maxCoeff() <= 0.0) Sigma_U = Matrix::Identity(Sigma_U.rows(), Sigma_U.cols());
  detail::BlockProblem bp(fp, ds.demos, NormalizationRule::sum(theta_star.sum()));
  bp.Su = linalg::spd_inverse(Sigma_U);
  bp.Wy = Matrix::Identity(fp.input_length(), fp.input_length()) / sigma_y;
  const double D = static_cast<double>(demo_count);
  auto normalized = [&](const Vector& U, const Vector& beta) {
    return (bp.data_cost(U) + bp.stationarity_cost(U, beta)) / D;
  };

  ConsistencyReport rep;
  rep.cost_at_truth = normalized(U_star, beta_star);
  rep.epsilons = epsilons;
  rep.perturbations = perturbations;
  for (double eps : epsilons) {
    int higher = 0;
    for (int p = 0; p < perturbations; ++p) {
      const Vector U = U_star + eps * U_star.norm() * unit_direction(U_star.size(), rng);
      const Vector beta = beta_star + eps * beta_star.norm() * unit_direction(beta_star.size(), rng);
      if (normalized(U, beta) > rep.cost_at_truth) ++higher;
    }
    rep.fraction_higher.push_back(static_cast<double>(higher) / static_cast<double>(perturbations));
  }
  return rep;
}

}  // namespace ioc_eiv::map
