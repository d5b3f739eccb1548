#include "dln/linnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dln/error.hpp"

namespace dln {

ArchSpec ArchSpec::uniform(int depth, int d_in, int width, int d_out) {
  ArchSpec arch;
  arch.depth = depth;
  arch.widths.assign(static_cast<std::size_t>(depth) + 1, width);
  arch.widths.front() = d_in;
  arch.widths.back() = d_out;
  return arch;
}

int ArchSpec::max_dim() const { return *std::max_element(widths.begin(), widths.end()); }

int ArchSpec::min_io() const { return std::min(d_in(), d_out()); }

void ArchSpec::validate() const {
  if (depth < 1) throw StructuralError("ArchSpec: depth must be >= 1");
  if (widths.size() != static_cast<std::size_t>(depth) + 1)
    throw StructuralError("ArchSpec: expected " + std::to_string(depth + 1) + " widths, got " +
                          std::to_string(widths.size()));
  for (int w : widths)
    if (w < 1) throw StructuralError("ArchSpec: widths must be positive");
  const int cap = min_io();
  for (int k = 1; k < depth; ++k)
    if (widths[k] < cap)
      throw StructuralError("ArchSpec: hidden width " + std::to_string(widths[k]) +
                            " below min(d_in, d_out) = " + std::to_string(cap));
}

void NetworkParams::validate() const {
  arch.validate();
  if (weights.size() != static_cast<std::size_t>(arch.depth))
    throw StructuralError("NetworkParams: weight count does not match depth");
  for (int k = 0; k < arch.depth; ++k) {
    const Matrix& w = weights[k];
    if (w.rows() != arch.widths[k + 1] || w.cols() != arch.widths[k])
      throw StructuralError("NetworkParams: layer " + std::to_string(k + 1) + " has shape " +
                            std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
}

NetworkParams NetworkParams::zeros(const ArchSpec& arch) {
  arch.validate();
  NetworkParams out{arch, {}};
  out.weights.reserve(arch.depth);
  for (int k = 0; k < arch.depth; ++k)
    out.weights.push_back(Matrix::Zero(arch.widths[k + 1], arch.widths[k]));
  return out;
}

Matrix forward_product(const NetworkParams& params) {
  if (params.weights.empty()) throw StructuralError("forward_product: empty network");
  Matrix acc = params.weights.front();
  for (std::size_t k = 1; k < params.weights.size(); ++k) {
    const Matrix& w = params.weights[k];
    if (w.cols() != acc.rows())
      throw StructuralError("forward_product: layer " + std::to_string(k + 1) +
                            " does not chain with its predecessor");
    acc = w * acc;
  }
  return acc;
}

NetworkParams balanced_factorization(const Matrix& a, const ArchSpec& arch) {
  arch.validate();
  if (a.rows() != arch.d_out() || a.cols() != arch.d_in())
    throw UsageError("balanced_factorization: matrix shape does not match architecture");
  const int depth = arch.depth;
  const int d = arch.min_io();

  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericalError("balanced_factorization: SVD failed for " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " input, max |a_ij| = " +
                         std::to_string(a.cwiseAbs().maxCoeff()));
  Vector root = svd.singularValues();
  for (Eigen::Index i = 0; i < root.size(); ++i)
    root(i) = root(i) < kZeroSingularValue ? 0.0 : std::pow(root(i), 1.0 / depth);

  // frames[k] has orthonormal columns, widths[k] × d.
  std::vector<Matrix> frames(depth + 1);
  frames[0] = svd.matrixV();
  frames[depth] = svd.matrixU();
  for (int k = 1; k < depth; ++k) frames[k] = Matrix::Identity(arch.widths[k], d);

  NetworkParams out{arch, {}};
  out.weights.reserve(depth);
  for (int k = 0; k < depth; ++k)
    out.weights.push_back(frames[k + 1] * root.asDiagonal() * frames[k].transpose());
  return out;
}

double representation_cost(const Matrix& a, int depth) {
  if (depth < 1) throw UsageError("representation_cost: depth must be >= 1");
  const Vector s = singular_values(a);
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) >= kZeroSingularValue) total += std::pow(s(i), 2.0 / depth);
  return depth * total;
}

double param_norm_sq(const NetworkParams& params) {
  double total = 0.0;
  for (const Matrix& w : params.weights) total += w.squaredNorm();
  return total;
}

NetworkParams init_gaussian(const ArchSpec& arch, double scale, std::uint64_t seed) {
  arch.validate();
  if (!(scale > 0.0)) throw UsageError("init_gaussian: scale must be positive");
  std::mt19937_64 rng(seed);
  NetworkParams out{arch, {}};
  out.weights.reserve(arch.depth);
  for (int k = 0; k < arch.depth; ++k) {
    std::normal_distribution<double> normal(0.0, scale / std::sqrt(double(arch.widths[k])));
    Matrix w(arch.widths[k + 1], arch.widths[k]);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = normal(rng);
    out.weights.push_back(std::move(w));
  }
  return out;
}

}  // namespace dln
