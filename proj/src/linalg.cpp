#include "ioc_eiv/linalg.hpp"

#include "ioc_eiv/error.hpp"

#include <cmath>

namespace ioc_eiv::linalg {

Matrix cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("cholesky: matrix is not square");
  const Index n = m.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefinite(j + 1);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

Matrix cholesky_regularized(const Matrix& m) {
  try {
    return cholesky(m);
  } catch (const NotPositiveDefinite&) {
    const Index n = m.rows();
    const double shift = 1e-10 * m.trace() / static_cast<double>(n);
    Matrix shifted = m;
    shifted.diagonal().array() += std::max(shift, 0.0);
    return cholesky(shifted);
  }
}

Vector cholesky_solve(const Matrix& lower, const Vector& rhs) {
  const auto l = lower.triangularView<Eigen::Lower>();
  Vector y = l.solve(rhs);
  return l.transpose().solve(y);
}

Matrix cholesky_solve(const Matrix& lower, const Matrix& rhs) {
  const auto l = lower.triangularView<Eigen::Lower>();
  Matrix y = l.solve(rhs);
  return l.transpose().solve(y);
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix spd_inverse(const Matrix& m) {
  const Matrix l = cholesky(m);
  return symmetrize(cholesky_solve(l, Matrix(Matrix::Identity(m.rows(), m.cols()))));
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

}  // namespace ioc_eiv::linalg
