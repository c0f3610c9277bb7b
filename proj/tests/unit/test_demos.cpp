#include "ioc_eiv/demos.hpp"
#include "ioc_eiv/error.hpp"

#include <Eigen/Eigenvalues>

#include <gtest/gtest.h>

#include <cmath>

using namespace ioc_eiv;

namespace {

Vector u_star() {
  Vector u(12);
  u << 0.7, 0.7, 0.56, 0.4, 0.3, 0.2, 0.15, 0.1, 0.05, 0.02, 0.01, 0.0;
  return u;
}

Matrix channel_cov(const DemoSet& ds, Index m) {
  // Pool the per-step noise of every demo into one m x m covariance.
  const Vector& us = *ds.U_star;
  const Index steps = us.size() / m;
  Matrix c = Matrix::Zero(m, m);
  double n = 0.0;
  for (const Vector& d : ds.demos) {
    for (Index k = 0; k < steps; ++k) {
      const Vector e = d.segment(k * m, m) - us.segment(k * m, m);
      c += e * e.transpose();
      n += 1.0;
    }
  }
  return c / n;
}

}  // namespace

TEST(Demos, ZeroNoiseReproducesTarget) {
  const DemoSet ds = generate(u_star(), NoiseSpec::gaussian(Matrix::Zero(1, 1), 5), 7);
  ASSERT_EQ(ds.count(), 7);
  for (const Vector& d : ds.demos) EXPECT_EQ(d, u_star());
  EXPECT_LE(sample_covariance(ds).cwiseAbs().maxCoeff(), 1e-30);
}

TEST(Demos, SeededAndParallelMatchesSerial) {
  const NoiseSpec spec = NoiseSpec::gaussian(Matrix::Constant(1, 1, 0.01), 42);
  const DemoSet a = generate(u_star(), spec, 50);
  const DemoSet b = generate(u_star(), spec, 50);
  const DemoSet c = generate_serial(u_star(), spec, 50);
  for (int d = 0; d < 50; ++d) {
    EXPECT_EQ(a.demos[static_cast<std::size_t>(d)], b.demos[static_cast<std::size_t>(d)]);
    EXPECT_EQ(a.demos[static_cast<std::size_t>(d)], c.demos[static_cast<std::size_t>(d)]);
  }
  const DemoSet other = generate(u_star(), NoiseSpec::gaussian(Matrix::Constant(1, 1, 0.01), 43), 50);
  EXPECT_NE(a.demos.front(), other.demos.front());
  // A prefix of a longer run is the shorter run.
  const DemoSet shorter = generate(u_star(), spec, 10);
  EXPECT_EQ(shorter.demos.back(), a.demos[9]);
}

TEST(Demos, GaussianCovarianceMatches) {
  Matrix sigma(2, 2);
  sigma << 0.04, 0.01, 0.01, 0.02;
  const DemoSet ds = generate(Vector::Zero(400), NoiseSpec::gaussian(sigma, 3), 250);
  EXPECT_LE((channel_cov(ds, 2) - sigma).cwiseAbs().maxCoeff(), 0.05 * 0.04);
}

TEST(Demos, TruncatedStaysInBounds) {
  const Vector lo = Vector::Constant(1, 0.0), hi = Vector::Constant(1, 0.65);
  const DemoSet ds = generate(u_star(), NoiseSpec::truncated_gaussian(Matrix::Constant(1, 1, 0.04), lo, hi, 9), 200);
  for (const Vector& d : ds.demos) {
    EXPECT_GE(d.minCoeff(), 0.0);
    EXPECT_LE(d.maxCoeff(), 0.65);
  }
}

TEST(Demos, UniformHalfWidthAndVariance) {
  const double hw = 0.3;
  const DemoSet ds = generate(Vector::Zero(200), NoiseSpec::uniform(Vector::Constant(1, hw), 4), 200);
  double var = 0.0;
  for (const Vector& d : ds.demos) {
    EXPECT_LE(d.cwiseAbs().maxCoeff(), hw);
    var += d.squaredNorm();
  }
  var /= 200.0 * 200.0;
  EXPECT_NEAR(var, hw * hw / 3.0, 0.02 * hw * hw / 3.0);
}

TEST(Demos, PercentScaleUsesAbsoluteChannelMean) {
  Vector u(6);
  u << 1.0, -2.0, 3.0, -4.0, 5.0, -6.0;  // channel 0: 1, 3, 5; channel 1: -2, -4, -6
  const Vector s = noise_scale_from_percent(u, 10.0, 2);
  EXPECT_NEAR(s(0), 0.3, 1e-15);
  EXPECT_NEAR(s(1), 0.4, 1e-15);
  EXPECT_EQ(noise_scale_from_percent(u, 0.0, 2), Vector::Zero(2));
  EXPECT_THROW(noise_scale_from_percent(u, -1.0, 2), Error);
  EXPECT_THROW(noise_scale_from_percent(u, 10.0, 4), DimensionError);
}

TEST(Demos, SampleStatistics) {
  DemoSet ds;
  Vector a(2), b(2), c(2);
  a << 1.0, 0.0;
  b << 3.0, 2.0;
  c << 2.0, 4.0;
  ds.demos = {a, b, c};
  const Vector mean = sample_mean(ds);
  EXPECT_NEAR(mean(0), 2.0, 1e-15);
  EXPECT_NEAR(mean(1), 2.0, 1e-15);
  const Matrix cov = sample_covariance(ds);
  EXPECT_NEAR(cov(0, 0), 1.0, 1e-15);  // (1 + 1 + 0) / 2
  EXPECT_NEAR(cov(1, 1), 4.0, 1e-15);  // (4 + 0 + 4) / 2
  EXPECT_NEAR(cov(0, 1), 1.0, 1e-15);  // (2 + 0 + 0) / 2
  EXPECT_TRUE(cov.isApprox(cov.transpose()));
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(cov).eigenvalues().minCoeff(), -1e-14);
  EXPECT_NEAR(rmse(a, b), std::sqrt(4.0), 1e-15);
}

TEST(Demos, RejectsBadSpecs) {
  EXPECT_THROW(generate(u_star(), NoiseSpec::gaussian(Matrix::Constant(1, 1, -1.0), 1), 3), Error);
  EXPECT_THROW(generate(u_star(), NoiseSpec::gaussian(Matrix::Constant(1, 1, 1.0), 1), 0), Error);
  EXPECT_THROW(generate(Vector::Zero(5), NoiseSpec::gaussian(Matrix::Identity(2, 2), 1), 3), DimensionError);
  EXPECT_THROW(generate(u_star(), NoiseSpec::uniform(Vector::Constant(1, -0.1), 1), 3), Error);
  EXPECT_THROW(generate(u_star(),
                        NoiseSpec::truncated_gaussian(Matrix::Constant(1, 1, 1.0), Vector::Ones(1), Vector::Zero(1), 1),
                        3),
               Error);
  EXPECT_THROW(noise_kind_from_string("laplace"), Error);
  EXPECT_EQ(noise_kind_from_string(to_string(NoiseSpec::Kind::uniform)), NoiseSpec::Kind::uniform);
}
