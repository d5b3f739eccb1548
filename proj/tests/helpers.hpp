#pragma once

#include <cstdint>
#include <random>

#include "dln/linnet.hpp"

namespace dln::test {

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline Matrix random_symmetric(int n, std::mt19937_64& rng) {
  const Matrix m = random_matrix(n, n, rng);
  return (m + m.transpose()) / 2.0;
}

inline NetworkParams scalar_net(double w1, double w2) {
  NetworkParams p = NetworkParams::zeros(ArchSpec::uniform(2, 1, 1, 1));
  p.weights[0](0, 0) = w1;
  p.weights[1](0, 0) = w2;
  return p;
}

}  // namespace dln::test
