#pragma once

#include <Eigen/Dense>

namespace dln {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Singular values below this are treated as exact zeros.
inline constexpr double kZeroSingularValue = 1e-14;

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // columns match `values`
};

// Eigen-decomposition of (s + sᵀ)/2, eigenvalues sorted descending.
SymmetricEigen symmetric_eigen(const Matrix& s);

// Eigenvalues only of (s + sᵀ)/2, descending.
Vector symmetric_eigenvalues(const Matrix& s);

// Singular values, descending, length min(rows, cols).
Vector singular_values(const Matrix& m);

// Largest |eigenvalue| of the symmetrized matrix.
double symmetric_spectral_norm(const Matrix& s);

// Random matrix with orthonormal columns (rows ≥ cols) from a Gaussian QR.
template <typename Rng>
Matrix random_orthonormal(int rows, int cols, Rng& rng);

}  // namespace dln

#include <random>

namespace dln {

template <typename Rng>
Matrix random_orthonormal(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  // Fix column signs so the result is a deterministic function of g.
  const Matrix r = qr.matrixQR().topLeftCorner(cols, cols);
  for (int j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

}  // namespace dln
