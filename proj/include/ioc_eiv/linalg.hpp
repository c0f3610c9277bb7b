#pragma once

#include "ioc_eiv/types.hpp"

namespace ioc_eiv::linalg {

/// Lower-triangular L with L * L^T = m. Only the lower triangle of `m` is
/// read. Throws NotPositiveDefinite carrying the 1-based index of the first
/// leading minor that fails.
Matrix cholesky(const Matrix& m);

/// cholesky() with a single retry on m + 1e-10 * trace(m)/dim * I. A second
/// failure propagates.
Matrix cholesky_regularized(const Matrix& m);

Vector cholesky_solve(const Matrix& lower, const Vector& rhs);
Matrix cholesky_solve(const Matrix& lower, const Matrix& rhs);

/// Inverse of a symmetric positive-definite matrix, symmetrized.
Matrix spd_inverse(const Matrix& m);

Matrix symmetrize(const Matrix& m);

bool is_symmetric(const Matrix& m, double tol = 1e-10);

}  // namespace ioc_eiv::linalg
