#include "ioc_eiv/demos.hpp"

#include "ioc_eiv/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace ioc_eiv {

NoiseSpec NoiseSpec::gaussian(Matrix sigma_u, std::uint64_t seed) {
  NoiseSpec s;
  s.kind = Kind::gaussian;
  s.sigma_u = std::move(sigma_u);
  s.seed = seed;
  return s;
}

NoiseSpec NoiseSpec::truncated_gaussian(Matrix sigma_u, Vector lower, Vector upper,
                                        std::uint64_t seed) {
  NoiseSpec s;
  s.kind = Kind::truncated_gaussian;
  s.sigma_u = std::move(sigma_u);
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  s.seed = seed;
  return s;
}

NoiseSpec NoiseSpec::uniform(Vector halfwidth, std::uint64_t seed) {
  NoiseSpec s;
  s.kind = Kind::uniform;
  s.halfwidth = std::move(halfwidth);
  s.seed = seed;
  return s;
}

Index NoiseSpec::channels() const {
  return kind == Kind::uniform ? halfwidth.size() : sigma_u.rows();
}

void NoiseSpec::validate() const {
  if (kind == Kind::uniform) {
    if (halfwidth.size() < 1 || (halfwidth.array() < 0.0).any())
      throw Error("noise: uniform half widths must be nonnegative");
    return;
  }
  if (sigma_u.rows() < 1 || sigma_u.rows() != sigma_u.cols())
    throw Error("noise: covariance must be square");
  const double scale = std::max(1e-300, sigma_u.cwiseAbs().maxCoeff());
  if ((sigma_u - sigma_u.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error("noise: covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_u);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
    throw Error("noise: covariance is not positive semidefinite");
  if (kind == Kind::truncated_gaussian) {
    if (lower.size() != sigma_u.rows() || upper.size() != sigma_u.rows())
      throw Error("noise: truncation bounds need one entry per channel");
    if ((lower.array() >= upper.array()).any()) throw Error("noise: lower bound must be < upper bound");
  }
}

const char* to_string(NoiseSpec::Kind kind) {
  switch (kind) {
    case NoiseSpec::Kind::gaussian:
      return "gaussian";
    case NoiseSpec::Kind::truncated_gaussian:
      return "truncated_gaussian";
    case NoiseSpec::Kind::uniform:
      return "uniform";
  }
  return "unknown";
}

NoiseSpec::Kind noise_kind_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseSpec::Kind::gaussian;
  if (name == "truncated_gaussian") return NoiseSpec::Kind::truncated_gaussian;
  if (name == "uniform") return NoiseSpec::Kind::uniform;
  throw Error("unknown noise kind '" + name + "'");
}

void DemoSet::validate() const {
  if (demos.empty()) throw Error("demo set is empty");
  for (const Vector& d : demos) {
    if (d.size() != demos.front().size()) throw DimensionError("demos have different lengths");
  }
  if (U_star && U_star->size() != length()) throw DimensionError("U_star length differs from demos");
}

namespace {

// Square-root factor of a PSD covariance, tolerant of singular matrices.
Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

Vector draw_demo(const Vector& U_star, const NoiseSpec& spec, const Matrix& factor, Rng& rng) {
  const Index m = spec.channels();
  const Index steps = U_star.size() / m;
  Vector out = U_star;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector z(m);
  for (Index k = 0; k < steps; ++k) {
    auto u = out.segment(k * m, m);
    const Vector base = U_star.segment(k * m, m);
    switch (spec.kind) {
      case NoiseSpec::Kind::gaussian:
        for (Index i = 0; i < m; ++i) z(i) = normal(rng);
        u = base + factor * z;
        break;
      case NoiseSpec::Kind::truncated_gaussian: {
        bool inside = false;
        for (int attempt = 0; attempt < 100000 && !inside; ++attempt) {
          for (Index i = 0; i < m; ++i) z(i) = normal(rng);
          u = base + factor * z;
          inside = (u.array() >= spec.lower.array()).all() && (u.array() <= spec.upper.array()).all();
        }
        if (!inside) throw Error("truncated_gaussian: acceptance region has negligible mass");
        break;
      }
      case NoiseSpec::Kind::uniform:
        for (Index i = 0; i < m; ++i) u(i) = base(i) + spec.halfwidth(i) * unit(rng);
        break;
    }
  }
  return out;
}

void check_inputs(const Vector& U_star, const NoiseSpec& spec, int count) {
  if (count < 1) throw Error("generate: demo count must be >= 1");
  spec.validate();
  if (U_star.size() == 0 || U_star.size() % spec.channels() != 0)
    throw DimensionError("generate: U_star length is not a multiple of the channel count");
}

}  // namespace

DemoSet generate(const Vector& U_star, const NoiseSpec& spec, int count) {
  check_inputs(U_star, spec, count);
  const Matrix factor = spec.kind == NoiseSpec::Kind::uniform ? Matrix() : psd_sqrt(spec.sigma_u);
  DemoSet ds;
  ds.U_star = U_star;
  ds.demos.resize(static_cast<std::size_t>(count));
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (int d = 0; d < count; ++d) {
    try {
      Rng rng = make_substream(spec.seed, static_cast<std::uint64_t>(d));
      ds.demos[static_cast<std::size_t>(d)] = draw_demo(U_star, spec, factor, rng);
    } catch (...) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) throw Error("truncated_gaussian: acceptance region has negligible mass");
  return ds;
}

DemoSet generate_serial(const Vector& U_star, const NoiseSpec& spec, int count) {
  check_inputs(U_star, spec, count);
  const Matrix factor = spec.kind == NoiseSpec::Kind::uniform ? Matrix() : psd_sqrt(spec.sigma_u);
  DemoSet ds;
  ds.U_star = U_star;
  for (int d = 0; d < count; ++d) {
    Rng rng = make_substream(spec.seed, static_cast<std::uint64_t>(d));
    ds.demos.push_back(draw_demo(U_star, spec, factor, rng));
  }
  return ds;
}

Vector noise_scale_from_percent(const Vector& U_star, double pct, Index channels) {
  if (!(pct >= 0.0)) throw Error("noise percent must be >= 0");
  if (channels < 1 || U_star.size() % channels != 0)
    throw DimensionError("noise_scale_from_percent: bad channel count");
  const Index steps = U_star.size() / channels;
  Vector sigma(channels);
  for (Index c = 0; c < channels; ++c) {
    double mean = 0.0;
    for (Index k = 0; k < steps; ++k) mean += U_star(k * channels + c);
    mean /= static_cast<double>(steps);
    sigma(c) = pct / 100.0 * std::abs(mean);
  }
  return sigma;
}

Vector sample_mean(const DemoSet& ds) {
  ds.validate();
  Vector mean = Vector::Zero(ds.length());
  for (const Vector& d : ds.demos) mean += d;
  return mean / static_cast<double>(ds.count());
}

Matrix sample_covariance(const DemoSet& ds) {
  const Vector mean = sample_mean(ds);
  Matrix cov = Matrix::Zero(ds.length(), ds.length());
  if (ds.count() < 2) return cov;
  for (const Vector& d : ds.demos) cov.noalias() += (d - mean) * (d - mean).transpose();
  return cov / static_cast<double>(ds.count() - 1);
}

double rmse(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("rmse: length mismatch");
  if (a.size() == 0) return 0.0;
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace ioc_eiv
