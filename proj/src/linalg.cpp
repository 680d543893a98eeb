#include "replab/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace replab {

Matrix orthonormalize(const Matrix& B) {
  Eigen::HouseholderQR<Matrix> qr(B);
  Matrix Q = qr.householderQ() * Matrix::Identity(B.rows(), B.cols());
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
      if (std::abs(Q(i, j)) > 1e-12) {
        if (Q(i, j) < 0) Q.col(j) = -Q.col(j);
        break;
      }
    }
  }
  return Q;
}

Vector min_norm_least_squares(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size())
    throw std::invalid_argument("min_norm_least_squares: dimension mismatch");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
  return cod.solve(y);
}

Matrix null_space_basis(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
  double tol = 1e-12 * std::max<double>(1.0, svd.singularValues().size() > 0
                                                 ? svd.singularValues()(0)
                                                 : 0.0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++rank;
  Eigen::Index n = A.cols();
  if (rank >= n) return Matrix(n, 0);
  return svd.matrixV().rightCols(n - rank);
}

double top_singular_value(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

double kth_singular_value(const Matrix& A, int k) {
  Eigen::JacobiSVD<Matrix> svd(A);
  if (k < 1 || k > svd.singularValues().size())
    throw std::invalid_argument("kth_singular_value: k out of range");
  return svd.singularValues()(k - 1);
}

Matrix psd_sqrt(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  Vector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace replab
