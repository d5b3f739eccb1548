#include "dln/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "dln/error.hpp"

namespace dln {

SymmetricEigen symmetric_eigen(const Matrix& s) {
  if (s.rows() != s.cols()) throw StructuralError("symmetric_eigen: matrix is not square");
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric_eigen: eigen solver did not converge (n=" +
                         std::to_string(s.rows()) + ")");
  // Eigen returns ascending order.
  const Eigen::Index n = sym.rows();
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = solver.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

Vector symmetric_eigenvalues(const Matrix& s) {
  if (s.rows() != s.cols()) throw StructuralError("symmetric_eigenvalues: matrix is not square");
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric_eigenvalues: eigen solver did not converge");
  return solver.eigenvalues().reverse();
}

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector(0);
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

double symmetric_spectral_norm(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  const Vector ev = symmetric_eigenvalues(s);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace dln
