#include "dln/objective.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "dln/error.hpp"

namespace dln {

CompletionProblem::CompletionProblem(Matrix target, std::vector<Entry> observed)
    : target_(std::move(target)), observed_(std::move(observed)) {
  if (observed_.empty()) throw UsageError("CompletionProblem: no observed entries");
  mask_ = Matrix::Zero(target_.rows(), target_.cols());
  std::set<std::pair<int, int>> seen;
  for (const Entry& e : observed_) {
    if (e.row < 0 || e.row >= target_.rows() || e.col < 0 || e.col >= target_.cols())
      throw UsageError("CompletionProblem: observed index (" + std::to_string(e.row) + ", " +
                       std::to_string(e.col) + ") out of range");
    if (!seen.emplace(e.row, e.col).second)
      throw UsageError("CompletionProblem: duplicate observed index (" + std::to_string(e.row) +
                       ", " + std::to_string(e.col) + ")");
    if (!std::isfinite(target_(e.row, e.col)))
      throw UsageError("CompletionProblem: observed entry is not finite");
    mask_(e.row, e.col) = 1.0;
    c1_ = std::max(c1_, target_(e.row, e.col) * target_(e.row, e.col));
  }
}

CompletionProblem CompletionProblem::two_by_two(double epsilon) {
  if (!(epsilon > 0.0)) throw UsageError("two_by_two: epsilon must be positive");
  Matrix target(2, 2);
  target << 1.0, 1.0 / epsilon, epsilon, 1.0;
  return CompletionProblem(std::move(target), {{0, 0}, {1, 0}, {1, 1}});
}

bool CompletionProblem::is_observed(Entry e) const {
  return e.row >= 0 && e.row < rows() && e.col >= 0 && e.col < cols() && mask_(e.row, e.col) != 0;
}

std::vector<Entry> CompletionProblem::missing() const {
  std::vector<Entry> out;
  for (int i = 0; i < rows(); ++i)
    for (int j = 0; j < cols(); ++j)
      if (mask_(i, j) == 0) out.push_back({i, j});
  return out;
}

double LayerGradients::norm() const {
  double total = 0.0;
  for (const Matrix& g : layers) total += g.squaredNorm();
  return std::sqrt(total);
}

double LayerGradients::max_abs() const {
  double out = 0.0;
  for (const Matrix& g : layers)
    if (g.size() > 0) out = std::max(out, g.cwiseAbs().maxCoeff());
  return out;
}

double cost(const Matrix& a, const CompletionProblem& problem) {
  if (a.rows() != problem.rows() || a.cols() != problem.cols())
    throw StructuralError("cost: matrix shape does not match problem");
  double total = 0.0;
  for (const Entry& e : problem.observed()) {
    const double r = problem.target()(e.row, e.col) - a(e.row, e.col);
    total += r * r;
  }
  return total / (2.0 * problem.count());
}

double regularized_loss(const NetworkParams& params, const CompletionProblem& problem,
                        double lambda) {
  if (lambda < 0.0) throw UsageError("regularized_loss: lambda must be nonnegative");
  return cost(forward_product(params), problem) + lambda * param_norm_sq(params);
}

Matrix entry_residual(const NetworkParams& params, const CompletionProblem& problem, Entry idx) {
  if (!problem.is_observed(idx))
    throw UsageError("entry_residual: index (" + std::to_string(idx.row) + ", " +
                     std::to_string(idx.col) + ") is not observed");
  const Matrix a = forward_product(params);
  Matrix g = Matrix::Zero(a.rows(), a.cols());
  g(idx.row, idx.col) = a(idx.row, idx.col) - problem.target()(idx.row, idx.col);
  return g;
}

Matrix layer_gradient(const NetworkParams& params, const Matrix& residual, int layer) {
  const int depth = params.depth();
  if (layer < 0 || layer >= depth)
    throw UsageError("layer_gradient: layer index " + std::to_string(layer) + " out of range");
  // Left chain W_{ℓ+1}ᵀ⋯W_Lᵀ G, applied from W_L inward.
  Matrix acc = residual;
  for (int k = depth - 1; k > layer; --k) acc = params.weights[k].transpose() * acc;
  // Right chain · W₁ᵀ⋯W_{ℓ−1}ᵀ.
  for (int k = 0; k < layer; ++k) acc = acc * params.weights[k].transpose();
  return acc;
}

LayerGradients full_gradient(const NetworkParams& params, const CompletionProblem& problem,
                             double lambda) {
  // T_ℓ is linear in G, so Σ_I T_ℓ(G_ij) = T_ℓ(M ⊙ (A_θ − A*)).
  const Matrix a = forward_product(params);
  Matrix residual = Matrix::Zero(a.rows(), a.cols());
  for (const Entry& e : problem.observed())
    residual(e.row, e.col) = (a(e.row, e.col) - problem.target()(e.row, e.col)) / problem.count();
  LayerGradients out;
  out.layers.reserve(params.depth());
  for (int k = 0; k < params.depth(); ++k)
    out.layers.push_back(layer_gradient(params, residual, k) + 2.0 * lambda * params.weights[k]);
  return out;
}

}  // namespace dln
