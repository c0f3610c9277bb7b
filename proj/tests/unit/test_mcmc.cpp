#include "ioc_eiv/error.hpp"
#include "ioc_eiv/forward.hpp"
#include "ioc_eiv/mcmc.hpp"

#include "support/oracles.hpp"
#include "support/problems.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

using namespace ioc_eiv;
using namespace ioc_eiv::mcmc;

namespace {

Matrix random_spd(std::mt19937_64& rng, Index n, double floor = 0.3) {
  std::normal_distribution<double> z(0.0, 1.0);
  const Matrix q = Matrix::NullaryExpr(n, n, [&] { return z(rng); });
  return q * q.transpose() / double(n) + floor * Matrix::Identity(n, n);
}

Vector random_vec(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> z(0.0, 1.0);
  return Vector::NullaryExpr(n, [&] { return z(rng); });
}

Priors random_priors(std::mt19937_64& rng, Index len, Index params) {
  Priors p;
  p.U0 = random_vec(rng, len);
  p.Sigma_U0 = random_spd(rng, len);
  p.beta0 = random_vec(rng, params);
  p.Sigma_beta = random_spd(rng, params);
  p.W_U = random_spd(rng, len);
  p.m_U = double(len) + 2.0;
  p.Sigma_Y = random_spd(rng, len);
  return p;
}

DemoSet random_demos(std::mt19937_64& rng, Index len, int count) {
  DemoSet ds;
  for (int d = 0; d < count; ++d) ds.demos.push_back(random_vec(rng, len));
  return ds;
}

bool is_spd(const Matrix& m) {
  const bool sym = (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.norm());
  return sym && Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().minCoeff() > 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sampling primitives

TEST(Sampling, MvnMoments) {
  Rng rng(1);
  Vector mean(2);
  mean << 1.0, -2.0;
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 0.5;
  const int n = 100000;
  Vector m = Vector::Zero(2);
  Matrix c = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_mvn(mean, cov, rng);
    m += x;
    c += (x - mean) * (x - mean).transpose();
  }
  m /= n;
  c /= n;
  EXPECT_LE((m - mean).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LE((c - cov).cwiseAbs().maxCoeff(), 0.03 * 2.0);
  EXPECT_THROW(sample_mvn(mean, -cov, rng), NotPositiveDefinite);
}

TEST(Sampling, InverseWishartMeanScalar) {
  Rng rng(2);
  const Matrix w = Matrix::Constant(1, 1, 2.0);
  const double nu = 10.0;
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += sample_inverse_wishart(w, nu, rng)(0, 0);
  const double expected = 2.0 / (nu - 1.0 - 1.0);
  EXPECT_NEAR(sum / 1e5, expected, 0.03 * expected);
}

TEST(Sampling, InverseWishartMeanMatrixAndNaiveOracle) {
  Rng rng(3);
  std::mt19937_64 oracle_rng(4);
  Matrix w(2, 2);
  w << 1.5, 0.4, 0.4, 0.8;
  const int nu = 10;
  Matrix sum = Matrix::Zero(2, 2), naive = Matrix::Zero(2, 2);
  for (int i = 0; i < 100000; ++i) {
    const Matrix s = sample_inverse_wishart(w, nu, rng);
    if (i < 1000) EXPECT_TRUE(is_spd(s));
    sum += s;
    naive += support::naive_inverse_wishart(w, nu, oracle_rng);
  }
  const Matrix expected = w / double(nu - 2 - 1);
  EXPECT_LE(((sum / 1e5) - expected).cwiseAbs().maxCoeff(), 0.05 * expected.cwiseAbs().maxCoeff());
  EXPECT_LE(((naive / 1e5) - expected).cwiseAbs().maxCoeff(), 0.05 * expected.cwiseAbs().maxCoeff());
  EXPECT_LE(((sum - naive) / 1e5).cwiseAbs().maxCoeff(), 0.05 * expected.cwiseAbs().maxCoeff());
}

TEST(Sampling, WishartMean) {
  Rng rng(5);
  Matrix s(2, 2);
  s << 1.0, 0.3, 0.3, 0.5;
  Matrix sum = Matrix::Zero(2, 2);
  for (int i = 0; i < 50000; ++i) sum += sample_wishart(s, 6.0, rng);
  EXPECT_LE((sum / 5e4 - 6.0 * s).cwiseAbs().maxCoeff(), 0.03 * 6.0);
  EXPECT_THROW(sample_wishart(s, 0.5, rng), Error);
}

TEST(Sampling, LogMvnDensity) {
  const Vector x = Vector::Constant(1, 1.0);
  const double lp = log_mvn_density(x, Vector::Zero(1), Matrix::Constant(1, 1, 4.0));
  EXPECT_NEAR(lp, -0.5 * std::log(2.0 * M_PI * 4.0) - 0.125, 1e-14);
}

// ---------------------------------------------------------------------------
// Conjugate conditionals

TEST(Conditionals, BetaMatchesGridQuadrature) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 5; ++t) {
    const Index len = 3;
    Priors p = random_priors(rng, len, 1);
    const Matrix J = random_vec(rng, len);
    const int D = 1 + t;
    const Gaussian g = full_conditional_beta(D, J, p);
    const Matrix wy = p.Sigma_Y.inverse();
    auto logp = [&](double b) {
      const Vector r = J * b;
      const double prior = (b - p.beta0(0)) * (b - p.beta0(0)) / p.Sigma_beta(0, 0);
      return -0.5 * prior - 0.5 * D * r.dot(wy * r);
    };
    EXPECT_LE(support::grid_tv_vs_normal(logp, g.mean(0), g.cov(0, 0)), 1e-3) << "instance " << t;
  }
}

TEST(Conditionals, UMatchesGridQuadrature) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 5; ++t) {
    Priors p = random_priors(rng, 1, 2);
    const DemoSet ds = random_demos(rng, 1, 2 + t);
    const Matrix M = Matrix::Constant(1, 1, random_vec(rng, 1)(0));
    const Vector off = random_vec(rng, 1);
    const Matrix su = Matrix::Constant(1, 1, 0.5 + 0.1 * t);
    const Gaussian g = full_conditional_U(ds, M, off, su, p);
    auto logp = [&](double u) {
      double lp = -0.5 * (u - p.U0(0)) * (u - p.U0(0)) / p.Sigma_U0(0, 0);
      for (const Vector& d : ds.demos) lp -= 0.5 * (d(0) - u) * (d(0) - u) / su(0, 0);
      const double r = M(0, 0) * u + off(0);
      lp -= 0.5 * double(ds.count()) * r * r / p.Sigma_Y(0, 0);
      return lp;
    };
    EXPECT_LE(support::grid_tv_vs_normal(logp, g.mean(0), g.cov(0, 0)), 1e-3) << "instance " << t;
  }
}

TEST(Conditionals, MatchStackedLinearGaussianFormulas) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> dim(1, 3), dcount(1, 4);
  for (int t = 0; t < 30; ++t) {
    const Index len = dim(rng), params = dim(rng);
    const int D = dcount(rng);
    const Priors p = random_priors(rng, len, params);
    const DemoSet ds = random_demos(rng, len, D);
    const Matrix ones = Matrix::Ones(D, 1);
    const Matrix eye_d = Matrix::Identity(D, D);

    // beta: y = 0 = (1_D (x) J) beta + e, e ~ N(0, I_D (x) Sigma_Y)
    const Matrix J = Matrix::NullaryExpr(len, params, [&] { return random_vec(rng, 1)(0); });
    const support::GaussianRef rb = support::linear_gaussian_posterior(
        p.beta0, p.Sigma_beta, support::kron(ones, J), Vector::Zero(D * len), support::kron(eye_d, p.Sigma_Y),
        Vector::Zero(D * len));
    const Gaussian gb = full_conditional_beta(D, J, p);
    EXPECT_LE((gb.mean - rb.mean).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + rb.mean.norm())) << t;
    EXPECT_LE((gb.cov - rb.cov).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + rb.cov.norm())) << t;

    // U: observations (U_1..U_D) = (1_D (x) I) U + n and 0 = (1_D (x) M) U + 1_D (x) o + e.
    const Matrix M = Matrix::NullaryExpr(len, len, [&] { return random_vec(rng, 1)(0); });
    const Vector o = random_vec(rng, len);
    const Matrix su = random_spd(rng, len);
    Matrix s(2 * D * len, len);
    s << support::kron(ones, Matrix::Identity(len, len)), support::kron(ones, M);
    Vector shift = Vector::Zero(2 * D * len);
    shift.tail(D * len) = support::kron(ones, o);
    Vector y = Vector::Zero(2 * D * len);
    for (int d = 0; d < D; ++d) y.segment(d * len, len) = ds.demos[static_cast<std::size_t>(d)];
    Matrix v = Matrix::Zero(2 * D * len, 2 * D * len);
    v.topLeftCorner(D * len, D * len) = support::kron(eye_d, su);
    v.bottomRightCorner(D * len, D * len) = support::kron(eye_d, p.Sigma_Y);
    const support::GaussianRef ru = support::linear_gaussian_posterior(p.U0, p.Sigma_U0, s, shift, v, y);
    const Gaussian gu = full_conditional_U(ds, M, o, su, p);
    EXPECT_LE((gu.mean - ru.mean).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + ru.mean.norm())) << t;
    EXPECT_LE((gu.cov - ru.cov).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + ru.cov.norm())) << t;
  }
}

TEST(Conditionals, BetaLimits) {
  // Flat data (Sigma_Y huge): conditional is the prior. Sharp data: mass on
  // the null space of J.
  std::mt19937_64 rng(13);
  Priors p = random_priors(rng, 3, 2);
  Matrix J(3, 2);
  J << 1.0, 1.0, 2.0, 2.0, 0.5, 0.5;  // null space spanned by (1, -1)
  p.Sigma_Y = 1e12 * Matrix::Identity(3, 3);
  Gaussian g = full_conditional_beta(5, J, p);
  EXPECT_LE((g.mean - p.beta0).norm(), 1e-9);
  EXPECT_LE((g.cov - p.Sigma_beta).norm(), 1e-9);
  p.Sigma_Y = 1e-12 * Matrix::Identity(3, 3);
  g = full_conditional_beta(5, J, p);
  EXPECT_LE(std::abs(g.mean(0) + g.mean(1)), 1e-6);
}

TEST(Conditionals, ULimitsRecoverSampleMean) {
  std::mt19937_64 rng(14);
  Priors p = random_priors(rng, 2, 1);
  p.Sigma_U0 = 1e12 * Matrix::Identity(2, 2);
  const DemoSet ds = random_demos(rng, 2, 6);
  const Matrix su = random_spd(rng, 2);
  // beta = 0 turns the stationarity term off.
  const Gaussian g = full_conditional_U(ds, Matrix::Zero(2, 2), Vector::Zero(2), su, p);
  EXPECT_LE((g.mean - sample_mean(ds)).norm(), 1e-9);
  EXPECT_LE((g.cov - su / 6.0).norm(), 1e-9);
}

TEST(Conditionals, SigmaUHandComputed) {
  Priors p;
  p.U0 = Vector::Zero(1);
  p.Sigma_U0 = Matrix::Identity(1, 1);
  p.beta0 = Vector::Zero(1);
  p.Sigma_beta = Matrix::Identity(1, 1);
  p.W_U = Matrix::Identity(1, 1);
  p.m_U = 3.0;
  p.Sigma_Y = Matrix::Identity(1, 1);
  DemoSet ds;
  ds.demos = {Vector::Constant(1, 1.0), Vector::Constant(1, 3.0)};
  const InverseWishart iw = full_conditional_SigmaU(ds, Vector::Zero(1), p);
  EXPECT_NEAR(iw.scale(0, 0), 1.0 + 1.0 + 9.0, 1e-14);
  EXPECT_DOUBLE_EQ(iw.dof, 5.0);
  // U equal to every demo leaves only the prior scale.
  ds.demos = {Vector::Constant(1, 2.0), Vector::Constant(1, 2.0)};
  EXPECT_NEAR(full_conditional_SigmaU(ds, Vector::Constant(1, 2.0), p).scale(0, 0), 1.0, 1e-14);
}

TEST(Conditionals, SigmaULargeSampleConcentrates) {
  std::mt19937_64 rng(15);
  Priors p = random_priors(rng, 2, 1);
  Matrix truth(2, 2);
  truth << 0.5, 0.1, 0.1, 0.3;
  Rng srng(16);
  DemoSet ds;
  for (int d = 0; d < 10000; ++d) ds.demos.push_back(sample_mvn(Vector::Zero(2), truth, srng));
  const InverseWishart iw = full_conditional_SigmaU(ds, Vector::Zero(2), p);
  const Matrix mean = iw.scale / (iw.dof - 2.0 - 1.0);
  EXPECT_LE((mean - truth).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Conditionals, DefaultPriorsAreValid) {
  const ForwardProblem fp = support::spring_damper();
  const Vector U = forward::solve(fp, *fp.theta_true()).U;
  const DemoSet noiseless = generate(U, NoiseSpec::gaussian(Matrix::Zero(1, 1), 1), 5);
  const Priors p = default_priors(noiseless, fp, NormalizationRule::sum(22.0));
  EXPECT_NO_THROW(p.validate(fp.input_length(), fp.parameter_count()));
  EXPECT_TRUE(is_spd(p.Sigma_U0));
  EXPECT_TRUE(is_spd(p.W_U));
  EXPECT_TRUE(is_spd(p.Sigma_beta));
  EXPECT_DOUBLE_EQ(p.m_U, double(fp.input_length()) + 2.0);
  EXPECT_LE((p.U0 - U).norm(), 1e-12);
  Priors bad = p;
  bad.beta0 = Vector::Zero(2);
  EXPECT_THROW(bad.validate(fp.input_length(), fp.parameter_count()), DimensionError);
}

// ---------------------------------------------------------------------------
// Gibbs chains

namespace {

DemoSet tiny_demos(double sigma, int count, std::uint64_t seed) {
  const ForwardProblem fp = support::tiny_lqp();
  const Vector U = forward::solve(fp, *fp.theta_true()).U;
  DemoSet ds = generate(U, NoiseSpec::gaussian(Matrix::Constant(1, 1, sigma * sigma), seed), count);
  return ds;
}

double max_z(const Vector& a, const Vector& sa, const Vector& b, const Vector& sb) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double se = std::sqrt(sa(i) * sa(i) + sb(i) * sb(i));
    worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(se, 1e-300));
  }
  return worst;
}

}  // namespace

TEST(Gibbs, NoiselessDemosPinU) {
  const ForwardProblem fp = support::spring_damper();
  const Vector U = forward::solve(fp, *fp.theta_true()).U;
  const DemoSet ds = generate(U, NoiseSpec::gaussian(Matrix::Zero(1, 1), 1), 10);
  const Priors p = default_priors(ds, fp, NormalizationRule::sum(22.0));
  Rng rng(20);
  const ChainOutput out = gibbs_run(ds, fp, p, {}, rng);
  EXPECT_EQ(out.samples.size(), 300u);
  EXPECT_LE(rmse(out.mean_U, U), 1e-3);
  EXPECT_DOUBLE_EQ(out.acceptance.beta, 1.0);
  EXPECT_DOUBLE_EQ(out.acceptance.U, 1.0);
  EXPECT_DOUBLE_EQ(out.acceptance.Sigma_U, 1.0);
}

TEST(Gibbs, NoiseCovarianceRecovered) {
  const ForwardProblem fp = support::spring_damper();
  const Vector U = forward::solve(fp, *fp.theta_true()).U;
  const double sigma = 0.1 * std::abs(U.mean());
  const DemoSet ds = generate(U, NoiseSpec::gaussian(Matrix::Constant(1, 1, sigma * sigma), 7), 50);
  const Priors p = default_priors(ds, fp, NormalizationRule::sum(22.0));
  Rng rng(21);
  const ChainOutput out = gibbs_run(ds, fp, p, {}, rng);
  const double avg = out.mean_Sigma_U.diagonal().mean();
  EXPECT_GE(avg, 0.3 * sigma * sigma);
  EXPECT_LE(avg, 3.0 * sigma * sigma);
  for (std::size_t i = 0; i < out.samples.size(); i += 10) EXPECT_TRUE(is_spd(out.samples[i].Sigma_U));
}

TEST(Gibbs, SeededRunsAreReproducible) {
  const ForwardProblem fp = support::tiny_lqp();
  const DemoSet ds = tiny_demos(0.05, 8, 3);
  const Priors p = default_priors(ds, fp, NormalizationRule::sum(3.0));
  GibbsOptions opt;
  opt.n_iter = 300;
  opt.n_keep = 100;
  Rng a(5), b(5), c(6);
  const ChainOutput x = gibbs_run(ds, fp, p, opt, a);
  const ChainOutput y = gibbs_run(ds, fp, p, opt, b);
  const ChainOutput z = gibbs_run(ds, fp, p, opt, c);
  EXPECT_EQ(x.mean_U, y.mean_U);
  EXPECT_EQ(x.mean_beta, y.mean_beta);
  EXPECT_NE(x.mean_U, z.mean_U);
  EXPECT_EQ(x.samples.back().iteration, 300);
  EXPECT_EQ(x.samples.front().iteration, 201);
}

TEST(Gibbs, DispersedStartsAgree) {
  const ForwardProblem fp = support::tiny_lqp();
  const DemoSet ds = tiny_demos(0.05, 20, 4);
  const Priors p = default_priors(ds, fp, NormalizationRule::sum(3.0));
  GibbsOptions opt;
  opt.n_iter = 20000;
  opt.n_keep = 15000;
  Rng r1(31), r2(32);
  const ChainOutput a = gibbs_run(ds, fp, p, opt, r1);
  ChainState far;
  far.U = p.U0 + Vector::Constant(p.U0.size(), 1.0);
  far.beta = -3.0 * p.beta0;
  far.Sigma_U = 10.0 * Matrix::Identity(p.U0.size(), p.U0.size());
  opt.init = far;
  const ChainOutput b = gibbs_run(ds, fp, p, opt, r2);
  EXPECT_LE(max_z(a.mean_U, a.mcse_U, b.mean_U, b.mcse_U), 3.0);
  EXPECT_LE(max_z(a.mean_beta, a.mcse_beta, b.mean_beta, b.mcse_beta), 3.0);
}

TEST(Gibbs, TraceCsvLayout) {
  const ForwardProblem fp = support::tiny_lqp();
  const DemoSet ds = tiny_demos(0.05, 4, 5);
  const Priors p = default_priors(ds, fp, NormalizationRule::sum(3.0));
  GibbsOptions opt;
  opt.n_iter = 20;
  opt.n_keep = 5;
  Rng rng(7);
  const ChainOutput out = gibbs_run(ds, fp, p, opt, rng);
  std::ostringstream os;
  write_trace_csv(os, out);
  std::istringstream is(os.str());
  std::string header, line;
  std::getline(is, header);
  const auto cols = std::count(header.begin(), header.end(), ',') + 1;
  EXPECT_EQ(cols, 1 + fp.parameter_count() + 2 * fp.input_length());
  EXPECT_EQ(header.rfind("iteration,beta_0", 0), 0u);
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ',') + 1, cols);
  }
  EXPECT_EQ(rows, 5);
  opt.n_keep = 0;
  EXPECT_THROW(gibbs_run(ds, fp, p, opt, rng), Error);
}

// ---------------------------------------------------------------------------
// Metropolis-Hastings

TEST(Mh, UniformTargetAlwaysAccepts) {
  Rng rng(40);
  const Proposal prop = random_walk_proposal(Matrix::Identity(2, 2));
  Vector x = Vector::Zero(2);
  for (int i = 0; i < 1000; ++i) {
    const MhStep s = mh_step(x, [](const Vector&) { return 0.0; }, prop, rng);
    ASSERT_TRUE(s.accepted);
    x = s.next;
  }
}

TEST(Mh, StandardNormalMoments) {
  Rng rng(41);
  const Proposal prop = random_walk_proposal(Matrix::Constant(1, 1, 2.4 * 2.4));
  auto target = [](const Vector& v) { return -0.5 * v.squaredNorm(); };
  Vector x = Vector::Zero(1);
  double s1 = 0.0, s2 = 0.0;
  int acc = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const MhStep s = mh_step(x, target, prop, rng);
    acc += s.accepted;
    x = s.next;
    s1 += x(0);
    s2 += x(0) * x(0);
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  EXPECT_LE(std::abs(mean), 0.02);
  EXPECT_GE(var, 0.95);
  EXPECT_LE(var, 1.05);
  EXPECT_GT(acc, n / 10);
  EXPECT_LT(acc, n);
}

TEST(Mh, IndependenceSamplerWithExactTargetAcceptsAll) {
  Rng rng(42);
  Matrix cov(2, 2);
  cov << 1.0, 0.3, 0.3, 2.0;
  const Vector mean = Vector::Constant(2, 0.5);
  const Proposal prop = independence_proposal(mean, cov);
  auto target = [&](const Vector& v) { return log_mvn_density(v, mean, cov); };
  Vector x = mean;
  int acc = 0;
  for (int i = 0; i < 2000; ++i) {
    const MhStep s = mh_step(x, target, prop, rng);
    acc += s.accepted;
    x = s.next;
  }
  EXPECT_EQ(acc, 2000);
}

TEST(Mh, NonFiniteTargetRejected) {
  Rng rng(43);
  const Proposal prop = random_walk_proposal(Matrix::Identity(1, 1));
  auto target = [](const Vector& v) { return v(0) > 0.0 ? -INFINITY : -0.5 * v(0) * v(0); };
  Vector x = Vector::Constant(1, -1.0);
  for (int i = 0; i < 2000; ++i) {
    x = mh_step(x, target, prop, rng).next;
    ASSERT_LE(x(0), 0.0);
  }
  auto nan_target = [](const Vector& v) { return v(0) > 0.0 ? NAN : 0.0; };
  for (int i = 0; i < 2000; ++i) {
    x = mh_step(x, nan_target, prop, rng).next;
    ASSERT_LE(x(0), 0.0);
  }
}

TEST(Mh, ZeroScaleWarns) {
  const ForwardProblem fp = support::tiny_lqp();
  const DemoSet ds = tiny_demos(0.05, 4, 6);
  const Priors p = default_priors(ds, fp, NormalizationRule::sum(3.0));
  const BilinearStationarity bs = build_stationarity(fp);
  MhGibbsOptions opt;
  opt.n_iter = 50;
  opt.n_keep = 10;
  opt.proposal_scale = 0.0;
  Rng rng(44);
  const ChainOutput out =
      mh_within_gibbs_run(ds, [&](const Vector& u) { return bs.jacobian(u); }, p, opt, rng);
  ASSERT_FALSE(out.warnings.empty());
  EXPECT_NE(out.warnings.front().find("a = 0"), std::string::npos);
  EXPECT_EQ(out.samples.back().U, sample_mean(ds));
  opt.proposal_scale = -1.0;
  EXPECT_THROW(mh_within_gibbs_run(ds, [&](const Vector& u) { return bs.jacobian(u); }, p, opt, rng), Error);
}

TEST(Mh, WithinGibbsMatchesGibbsOnLinearProblem) {
  const ForwardProblem fp = support::tiny_lqp();
  const DemoSet ds = tiny_demos(0.05, 20, 8);
  const Priors p = default_priors(ds, fp, NormalizationRule::sum(3.0));
  const BilinearStationarity bs = build_stationarity(fp);
  Rng r1(50), r2(51);
  GibbsOptions g;
  g.n_iter = 40000;
  g.n_keep = 30000;
  const ChainOutput exact = gibbs_run(ds, fp, p, g, r1);
  MhGibbsOptions m;
  m.n_iter = 40000;
  m.n_keep = 30000;
  m.proposal_scale = 0.01;
  const ChainOutput mh = mh_within_gibbs_run(ds, [&](const Vector& u) { return bs.jacobian(u); }, p, m, r2);
  EXPECT_GT(mh.acceptance.U, 0.1);
  EXPECT_LT(mh.acceptance.U, 0.95);
  EXPECT_LE(max_z(exact.mean_U, exact.mcse_U, mh.mean_U, mh.mcse_U), 3.0);
  EXPECT_LE(max_z(exact.mean_beta, exact.mcse_beta, mh.mean_beta, mh.mcse_beta), 3.0);
}
