#include "ioc_eiv/mcmc.hpp"

#include "ioc_eiv/error.hpp"
#include "ioc_eiv/kkt_baseline.hpp"
#include "ioc_eiv/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace ioc_eiv::mcmc {

namespace {

Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

// Square-root factor that tolerates singular covariances.
Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(linalg::symmetrize(cov));
  Vector s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * s.asDiagonal();
}

void require_square(const Matrix& m, Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    std::ostringstream os;
    os << name << " must be " << n << "x" << n << ", got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

struct DemoStats {
  Index count = 0;
  Vector mean;
  Matrix scatter;  // sum_d (U_d - mean)(U_d - mean)'
};

DemoStats demo_stats(const DemoSet& ds) {
  DemoStats s;
  s.count = ds.count();
  s.mean = sample_mean(ds);
  const Index n = ds.length();
  s.scatter = Matrix::Zero(n, n);
  for (const auto& u : ds.demos) {
    Vector r = u - s.mean;
    s.scatter.noalias() += r * r.transpose();
  }
  return s;
}

struct Precomputed {
  Matrix Sigma_Y_inv;
  Matrix Sigma_U0_inv;
  Matrix Sigma_beta_inv;
};

Precomputed precompute(const Priors& p) {
  return {linalg::spd_inverse(p.Sigma_Y), linalg::spd_inverse(p.Sigma_U0),
          linalg::spd_inverse(p.Sigma_beta)};
}

// Posterior N(P^{-1} rhs, P^{-1}) from its precision P. Solving against the
// Cholesky factor keeps the mean accurate in stiff directions, where forming
// prior_mean - cov * (large term) would cancel.
Gaussian from_precision(const Matrix& precision, const Vector& rhs) {
  const Matrix L = linalg::cholesky_regularized(linalg::symmetrize(precision));
  Gaussian g;
  g.mean = linalg::cholesky_solve(L, rhs);
  g.cov = linalg::symmetrize(linalg::cholesky_solve(L, Matrix(Matrix::Identity(rhs.size(), rhs.size()))));
  return g;
}

Gaussian conditional_beta(double D, const Matrix& J, const Priors& p, const Precomputed& pc) {
  const Matrix JtW = J.transpose() * pc.Sigma_Y_inv;
  return from_precision(pc.Sigma_beta_inv + D * JtW * J, pc.Sigma_beta_inv * p.beta0);
}

Gaussian conditional_U(const DemoStats& st, const Matrix& M, const Vector& offset, const Matrix& Sigma_U,
                       const Priors& p, const Precomputed& pc) {
  const double D = static_cast<double>(st.count);
  const Matrix Sigma_U_inv = linalg::spd_inverse(Sigma_U);
  const Matrix MtW = M.transpose() * pc.Sigma_Y_inv;
  const Matrix precision = pc.Sigma_U0_inv + D * MtW * M + D * Sigma_U_inv;
  const Vector rhs = pc.Sigma_U0_inv * p.U0 - D * (MtW * offset) + D * (Sigma_U_inv * st.mean);
  return from_precision(precision, rhs);
}

InverseWishart conditional_SigmaU(const DemoStats& st, const Vector& U, const Priors& p) {
  Vector shift = st.mean - U;
  InverseWishart iw;
  iw.scale = linalg::symmetrize(p.W_U + st.scatter + static_cast<double>(st.count) * shift * shift.transpose());
  iw.dof = static_cast<double>(st.count) + p.m_U;
  return iw;
}

// Batch means over the retained draws of one component family.
template <class Get>
Vector batch_mcse(const std::vector<ChainState>& s, Index dim, Get get) {
  const std::size_t n = s.size();
  Vector out = Vector::Zero(dim);
  if (n < 4) return out;
  const std::size_t batches = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(double(n))));
  const std::size_t len = n / batches;
  if (len == 0) return out;
  Matrix means = Matrix::Zero(dim, static_cast<Index>(batches));
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < len; ++i) means.col(Index(b)) += get(s[b * len + i]);
    means.col(Index(b)) /= double(len);
  }
  Vector grand = means.rowwise().mean();
  for (Index i = 0; i < dim; ++i) {
    double var = (means.row(i).array() - grand(i)).square().sum() / double(batches - 1);
    out(i) = std::sqrt(var / double(batches));
  }
  return out;
}

void summarize(ChainOutput& out) {
  if (out.samples.empty()) return;
  const auto& first = out.samples.front();
  out.mean_U = Vector::Zero(first.U.size());
  out.mean_beta = Vector::Zero(first.beta.size());
  out.mean_Sigma_U = Matrix::Zero(first.Sigma_U.rows(), first.Sigma_U.cols());
  for (const auto& s : out.samples) {
    out.mean_U += s.U;
    out.mean_beta += s.beta;
    out.mean_Sigma_U += s.Sigma_U;
  }
  const double n = static_cast<double>(out.samples.size());
  out.mean_U /= n;
  out.mean_beta /= n;
  out.mean_Sigma_U /= n;
  out.mcse_U = batch_mcse(out.samples, first.U.size(), [](const ChainState& c) { return c.U; });
  out.mcse_beta = batch_mcse(out.samples, first.beta.size(), [](const ChainState& c) { return c.beta; });
}

void check_run_lengths(int n_iter, int n_keep) {
  if (n_iter < 1) throw Error("n_iter must be >= 1");
  if (n_keep < 1 || n_keep > n_iter) throw Error("n_keep must lie in [1, n_iter]");
}

void check_demos(const DemoSet& ds, const Priors& priors) {
  if (ds.count() < 1) throw Error("demo set is empty");
  ds.validate();
  if (ds.length() != priors.U0.size()) throw DimensionError("demo length does not match the prior on U");
}

}  // namespace

Vector sample_mvn(const Vector& mean, const Matrix& cov, Rng& rng) {
  require_square(cov, mean.size(), "covariance");
  Matrix L = linalg::cholesky(cov);
  return mean + L * standard_normal(mean.size(), rng);
}

Matrix sample_wishart(const Matrix& scale, double nu, Rng& rng) {
  const Index p = scale.rows();
  require_square(scale, p, "Wishart scale");
  if (!(nu > static_cast<double>(p) - 1.0)) throw Error("Wishart degrees of freedom must exceed dim - 1");
  Matrix L = linalg::cholesky(scale);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix A = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi(nu - static_cast<double>(i));
    A(i, i) = std::sqrt(chi(rng));
    for (Index j = 0; j < i; ++j) A(i, j) = z(rng);
  }
  Matrix T = L * A;
  return linalg::symmetrize(T * T.transpose());
}

Matrix sample_inverse_wishart(const Matrix& W, double nu, Rng& rng) {
  const Index p = W.rows();
  require_square(W, p, "inverse-Wishart scale");
  if (!(nu > static_cast<double>(p) - 1.0)) throw Error("inverse-Wishart degrees of freedom must exceed dim - 1");
  Matrix L = linalg::cholesky(linalg::spd_inverse(W));
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix A = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi(nu - static_cast<double>(i));
    A(i, i) = std::sqrt(chi(rng));
    for (Index j = 0; j < i; ++j) A(i, j) = z(rng);
  }
  // X = T T' ~ W(W^{-1}, nu) with T lower triangular, so X^{-1} = T^{-T} T^{-1}.
  Matrix T = L * A;
  Matrix Tinv = T.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
  return linalg::symmetrize(Tinv.transpose() * Tinv);
}

double log_mvn_density(const Vector& x, const Vector& mean, const Matrix& cov) {
  require_square(cov, mean.size(), "covariance");
  if (x.size() != mean.size()) throw DimensionError("log_mvn_density: size mismatch");
  Matrix L = linalg::cholesky(cov);
  Vector w = L.triangularView<Eigen::Lower>().solve(x - mean);
  double logdet = 2.0 * L.diagonal().array().log().sum();
  return -0.5 * (w.squaredNorm() + logdet + static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi));
}

void Priors::validate(Index input_length, Index parameter_count) const {
  if (U0.size() != input_length) throw DimensionError("U0 has the wrong length");
  if (beta0.size() != parameter_count) throw DimensionError("beta0 has the wrong length");
  require_square(Sigma_U0, input_length, "Sigma_U0");
  require_square(Sigma_beta, parameter_count, "Sigma_beta");
  require_square(W_U, input_length, "W_U");
  if (Sigma_Y.rows() != input_length || Sigma_Y.cols() != input_length)
    throw DimensionError("Sigma_Y must match the stationarity dimension");
  if (!(m_U > static_cast<double>(input_length) - 1.0)) throw Error("m_U must exceed mN - 1");
  linalg::cholesky(Sigma_U0);
  linalg::cholesky(Sigma_beta);
  linalg::cholesky(W_U);
  linalg::cholesky(Sigma_Y);
}

Priors default_priors(const DemoSet& ds, const ForwardProblem& fp, const NormalizationRule& norm,
                      double sigma_y) {
  if (ds.count() < 1) throw Error("default priors need at least one demonstration");
  const Index n = fp.input_length();
  if (ds.length() != n) throw DimensionError("demo length does not match the problem");
  if (!(sigma_y > 0.0)) throw Error("sigma_y must be positive");

  Vector mean = sample_mean(ds);
  Matrix S = sample_covariance(ds);
  const double floor = 1e-8 * std::max(1.0, mean.squaredNorm() / static_cast<double>(n));

  Priors p;
  p.U0 = mean;
  p.Sigma_U0 = std::max(10.0 * S.trace() / static_cast<double>(n), floor) * Matrix::Identity(n, n);
  p.beta0 = kkt::kkt_single(mean, fp, norm).beta();
  Vector sb = p.beta0.array().square().max(1.0).matrix() * 100.0;
  p.Sigma_beta = sb.asDiagonal();
  p.W_U = S.diagonal().cwiseMax(floor).asDiagonal();
  p.m_U = static_cast<double>(n) + 2.0;
  p.Sigma_Y = sigma_y * Matrix::Identity(n, n);
  return p;
}

Gaussian full_conditional_beta(Index demo_count, const Matrix& jacobian, const Priors& priors) {
  if (jacobian.cols() != priors.beta0.size()) throw DimensionError("J(U) columns do not match beta0");
  return conditional_beta(static_cast<double>(demo_count), jacobian, priors, precompute(priors));
}

Gaussian full_conditional_beta(const DemoSet& ds, const Vector& U, const BilinearStationarity& bs,
                               const Priors& priors) {
  return full_conditional_beta(ds.count(), bs.jacobian(U), priors);
}

Gaussian full_conditional_U(const DemoSet& ds, const Matrix& M_beta, const Vector& offset,
                            const Matrix& Sigma_U, const Priors& priors) {
  check_demos(ds, priors);
  return conditional_U(demo_stats(ds), M_beta, offset, Sigma_U, priors, precompute(priors));
}

Gaussian full_conditional_U(const DemoSet& ds, const Vector& beta, const Matrix& Sigma_U,
                            const BilinearStationarity& bs, const Priors& priors) {
  const Index q = bs.feature_count();
  Vector theta = beta_theta(beta, q);
  return full_conditional_U(ds, bs.M_beta(theta), bs.offset(theta, beta_lambda(beta, q)), Sigma_U, priors);
}

InverseWishart full_conditional_SigmaU(const DemoSet& ds, const Vector& U, const Priors& priors) {
  check_demos(ds, priors);
  return conditional_SigmaU(demo_stats(ds), U, priors);
}

ChainOutput gibbs_run(const DemoSet& ds, const ForwardProblem& fp, const Priors& priors,
                      const GibbsOptions& options, Rng& rng) {
  check_run_lengths(options.n_iter, options.n_keep);
  priors.validate(fp.input_length(), fp.parameter_count());
  check_demos(ds, priors);

  const BilinearStationarity bs = build_stationarity(fp);
  const DemoStats st = demo_stats(ds);
  const Precomputed pc = precompute(priors);
  const Index q = fp.feature_count();
  const double D = static_cast<double>(st.count);

  ChainState cur;
  if (options.init) {
    cur = *options.init;
    if (cur.U.size() != fp.input_length() || cur.beta.size() != fp.parameter_count())
      throw DimensionError("initial chain state has the wrong size");
    require_square(cur.Sigma_U, fp.input_length(), "initial Sigma_U");
  } else {
    NormalizationRule norm = NormalizationRule::sum(1.0);
    if (options.init_norm) {
      norm = *options.init_norm;
    } else {
      double s = beta_theta(priors.beta0, q).sum();
      if (s > 0.0) norm = NormalizationRule::sum(s);
    }
    cur.U = st.mean;
    cur.beta = kkt::kkt_single(st.mean, fp, norm).beta();
    cur.Sigma_U = Matrix::Identity(fp.input_length(), fp.input_length());
  }
  cur.iteration = 1;

  ChainOutput out;
  const int first_kept = options.n_iter - options.n_keep + 1;
  if (first_kept <= 1) out.samples.push_back(cur);

  for (int j = 2; j <= options.n_iter; ++j) {
    Gaussian gb = conditional_beta(D, bs.jacobian(cur.U), priors, pc);
    cur.beta = sample_mvn(gb.mean, gb.cov, rng);

    Vector theta = beta_theta(cur.beta, q);
    Gaussian gu = conditional_U(st, bs.M_beta(theta), bs.offset(theta, beta_lambda(cur.beta, q)),
                                cur.Sigma_U, priors, pc);
    cur.U = sample_mvn(gu.mean, gu.cov, rng);

    InverseWishart iw = conditional_SigmaU(st, cur.U, priors);
    cur.Sigma_U = sample_inverse_wishart(iw.scale, iw.dof, rng);
    cur.iteration = j;

    if (j >= first_kept) out.samples.push_back(cur);
  }
  summarize(out);
  return out;
}

void write_trace_csv(std::ostream& out, const ChainOutput& chain) {
  if (chain.samples.empty()) {
    out << "iteration\n";
    return;
  }
  const auto& f = chain.samples.front();
  out << "iteration";
  for (Index i = 0; i < f.beta.size(); ++i) out << ",beta_" << i;
  for (Index i = 0; i < f.U.size(); ++i) out << ",U_" << i;
  for (Index i = 0; i < f.Sigma_U.rows(); ++i) out << ",SigmaU_" << i;
  out << '\n';
  std::ostringstream line;
  line.precision(17);
  for (const auto& s : chain.samples) {
    line.str("");
    line << s.iteration;
    for (Index i = 0; i < s.beta.size(); ++i) line << ',' << s.beta(i);
    for (Index i = 0; i < s.U.size(); ++i) line << ',' << s.U(i);
    for (Index i = 0; i < s.Sigma_U.rows(); ++i) line << ',' << s.Sigma_U(i, i);
    out << line.str() << '\n';
  }
}

Proposal random_walk_proposal(Matrix cov) {
  Matrix root = psd_sqrt(cov);
  Proposal p;
  p.sample = [root](const Vector& current, Rng& rng) {
    if (root.rows() != current.size()) throw DimensionError("proposal covariance does not match the state");
    return Vector(current + root * standard_normal(current.size(), rng));
  };
  p.log_density = [](const Vector&, const Vector&) { return 0.0; };
  return p;
}

Proposal independence_proposal(Vector mean, Matrix cov) {
  Matrix L = linalg::cholesky(cov);
  Proposal p;
  p.sample = [mean, L](const Vector&, Rng& rng) {
    return Vector(mean + L * standard_normal(mean.size(), rng));
  };
  p.log_density = [mean, cov](const Vector& to, const Vector&) { return log_mvn_density(to, mean, cov); };
  return p;
}

MhStep mh_step(const Vector& current, const LogDensity& log_target, const Proposal& proposal, Rng& rng) {
  Vector cand = proposal.sample(current, rng);
  const double lt_cand = log_target(cand);
  const double lt_cur = log_target(current);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (!std::isfinite(lt_cand)) return {current, false};
  const double log_ratio =
      lt_cand - lt_cur + proposal.log_density(current, cand) - proposal.log_density(cand, current);
  if (std::isnan(log_ratio)) return {current, false};
  if (log_ratio >= 0.0 || std::log(u) < log_ratio) return {cand, true};
  return {current, false};
}

double log_conditional_U(const Vector& U, const DemoSet& ds, const Vector& beta, const Matrix& Sigma_U,
                         const JacobianFn& jacobian, const Priors& priors) {
  const Matrix J = jacobian(U);
  const Vector r = J * beta;
  Matrix LY = linalg::cholesky(priors.Sigma_Y);
  Matrix LU0 = linalg::cholesky(priors.Sigma_U0);
  Matrix LU = linalg::cholesky(Sigma_U);
  const double D = static_cast<double>(ds.count());
  double lp = -0.5 * LU0.triangularView<Eigen::Lower>().solve(U - priors.U0).squaredNorm();
  lp -= 0.5 * D * LY.triangularView<Eigen::Lower>().solve(r).squaredNorm();
  for (const auto& u : ds.demos) lp -= 0.5 * LU.triangularView<Eigen::Lower>().solve(u - U).squaredNorm();
  return lp;
}

MhStep mh_within_gibbs_U(const Vector& U, const DemoSet& ds, const Vector& beta, const Matrix& Sigma_U,
                         const JacobianFn& jacobian, const Priors& priors, double a, Rng& rng) {
  if (a < 0.0) throw Error("proposal scale must be non-negative");
  Proposal prop = random_walk_proposal(a * Sigma_U);
  auto target = [&](const Vector& x) { return log_conditional_U(x, ds, beta, Sigma_U, jacobian, priors); };
  return mh_step(U, target, prop, rng);
}

ChainOutput mh_within_gibbs_run(const DemoSet& ds, const JacobianFn& jacobian, const Priors& priors,
                                const MhGibbsOptions& options, Rng& rng) {
  check_run_lengths(options.n_iter, options.n_keep);
  const Index n = priors.U0.size();
  priors.validate(n, priors.beta0.size());
  check_demos(ds, priors);

  const DemoStats st = demo_stats(ds);
  const Precomputed pc = precompute(priors);
  const double D = static_cast<double>(st.count);

  ChainState cur;
  if (options.init) {
    cur = *options.init;
  } else {
    cur.U = st.mean;
    cur.beta = priors.beta0;
    cur.Sigma_U = Matrix::Identity(n, n);
  }
  cur.iteration = 1;

  ChainOutput out;
  if (options.proposal_scale == 0.0)
    out.warnings.push_back("proposal scale a = 0: every proposal equals the current state, U never moves");

  const int first_kept = options.n_iter - options.n_keep + 1;
  if (first_kept <= 1) out.samples.push_back(cur);

  int accepted = 0;
  int proposals = 0;
  bool moved = false;
  for (int j = 2; j <= options.n_iter; ++j) {
    Matrix J = jacobian(cur.U);
    if (J.cols() != cur.beta.size()) throw DimensionError("J(U) columns do not match beta");
    Gaussian gb = conditional_beta(D, J, priors, pc);
    cur.beta = sample_mvn(gb.mean, gb.cov, rng);

    MhStep step = mh_within_gibbs_U(cur.U, ds, cur.beta, cur.Sigma_U, jacobian, priors,
                                    options.proposal_scale, rng);
    ++proposals;
    if (step.accepted) {
      ++accepted;
      if (step.next != cur.U) moved = true;
    }
    cur.U = step.next;

    InverseWishart iw = conditional_SigmaU(st, cur.U, priors);
    cur.Sigma_U = sample_inverse_wishart(iw.scale, iw.dof, rng);
    cur.iteration = j;
    if (j >= first_kept) out.samples.push_back(cur);
  }
  out.acceptance.U = proposals > 0 ? double(accepted) / double(proposals) : 1.0;
  if (proposals > 0 && !moved && options.proposal_scale != 0.0)
    out.warnings.push_back("U chain never moved during the run");
  summarize(out);
  return out;
}

}  // namespace ioc_eiv::mcmc
