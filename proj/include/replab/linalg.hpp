#pragma once

#include <Eigen/Dense>

namespace replab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thin-QR orthonormalization with deterministic sign fixing: the first
// entry of each column with magnitude above 1e-12 is made positive.
Matrix orthonormalize(const Matrix& B);

// Minimum-norm least-squares solution of X theta ~= y.
Vector min_norm_least_squares(const Matrix& X, const Vector& y);

// Orthonormal basis of the null space of A (rows span the constraints).
// Returns a matrix whose columns form the basis; empty when A has full
// column rank.
Matrix null_space_basis(const Matrix& A);

// Largest singular value.
double top_singular_value(const Matrix& A);

// k-th largest singular value (1-indexed).
double kth_singular_value(const Matrix& A, int k);

// Symmetric PSD square root via eigendecomposition (negative eigenvalues
// clamped to zero).
Matrix psd_sqrt(const Matrix& S);

}  // namespace replab
