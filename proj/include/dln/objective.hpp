#pragma once

#include <span>
#include <vector>

#include "dln/linnet.hpp"

namespace dln {

// A (row, col) position in the target matrix, zero-based.
struct Entry {
  int row = 0;
  int col = 0;
  friend bool operator==(const Entry&, const Entry&) = default;
};

// Target matrix A*, observed index set I, N = |I| and C₁ = max_{(i,j)∈I} (A*_ij)².
class CompletionProblem {
 public:
  CompletionProblem(Matrix target, std::vector<Entry> observed);

  // The 2×2 problem [[1, *], [ε, 1]]; the stored target fills * with 1/ε, the
  // rank-1 completion.
  static CompletionProblem two_by_two(double epsilon);

  const Matrix& target() const { return target_; }
  std::span<const Entry> observed() const { return observed_; }
  int count() const { return static_cast<int>(observed_.size()); }
  double c1() const { return c1_; }
  int rows() const { return static_cast<int>(target_.rows()); }
  int cols() const { return static_cast<int>(target_.cols()); }

  bool is_observed(Entry e) const;
  // 1 on observed entries, 0 elsewhere.
  const Matrix& mask() const { return mask_; }
  // Unobserved positions in row-major order.
  std::vector<Entry> missing() const;

 private:
  Matrix target_;
  std::vector<Entry> observed_;
  Matrix mask_;
  double c1_ = 0.0;
};

// Per-layer matrices shaped like the weights of a NetworkParams.
struct LayerGradients {
  std::vector<Matrix> layers;

  double norm() const;
  double max_abs() const;
};

// C(A) = (1/2N) Σ_{(i,j)∈I} (A*_ij − A_ij)².
double cost(const Matrix& a, const CompletionProblem& problem);

// C(A_θ) + λ‖θ‖².
double regularized_loss(const NetworkParams& params, const CompletionProblem& problem,
                        double lambda);

// G_{θ,ij}: zero except entry (i,j) = A_θ,ij − A*_ij. Throws UsageError for
// unobserved indices.
Matrix entry_residual(const NetworkParams& params, const CompletionProblem& problem, Entry idx);

// T_ℓ = W_{ℓ+1}ᵀ⋯W_Lᵀ G W₁ᵀ⋯W_{ℓ−1}ᵀ for zero-based `layer` (W_{layer+1}).
Matrix layer_gradient(const NetworkParams& params, const Matrix& residual, int layer);

// Exact gradient of L_λ: (1/N) Σ_I T_ℓ(G_ij) + 2λW_ℓ.
LayerGradients full_gradient(const NetworkParams& params, const CompletionProblem& problem,
                             double lambda);

}  // namespace dln
