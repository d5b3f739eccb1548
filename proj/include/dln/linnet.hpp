#pragma once

#include <cstdint>
#include <vector>

#include "dln/linalg.hpp"

namespace dln {

// Depth and layer widths w₀ = d_in, …, w_L = d_out of a deep linear network.
struct ArchSpec {
  int depth = 0;
  std::vector<int> widths;

  // All hidden layers share `width`.
  static ArchSpec uniform(int depth, int d_in, int width, int d_out);

  int d_in() const { return widths.front(); }
  int d_out() const { return widths.back(); }
  // Largest row or column count over all weight matrices.
  int max_dim() const;
  int min_io() const;

  // Throws StructuralError unless the widths chain is well formed and every
  // hidden width is at least min(d_in, d_out).
  void validate() const;
};

// θ = (W₁, …, W_L). weights[k] is W_{k+1}, of shape widths[k+1] × widths[k].
struct NetworkParams {
  ArchSpec arch;
  std::vector<Matrix> weights;

  int depth() const { return static_cast<int>(weights.size()); }
  void validate() const;

  static NetworkParams zeros(const ArchSpec& arch);
};

// W_L ⋯ W₁, accumulated left to right starting from W₁.
Matrix forward_product(const NetworkParams& params);

// Balanced θ with A_θ = a: W_ℓ = U_ℓ S^{1/L} U_{ℓ-1}ᵀ where U₀ = V, U_L = U
// from a = U S Vᵀ and the interior frames are padded identity blocks.
NetworkParams balanced_factorization(const Matrix& a, const ArchSpec& arch);

// R(A; L) = L Σᵢ sᵢ(A)^{2/L} over nonzero singular values.
double representation_cost(const Matrix& a, int depth);

// Σ_ℓ ‖W_ℓ‖_F².
double param_norm_sq(const NetworkParams& params);

// I.i.d. N(0, (scale/√w_{ℓ-1})²) entries, drawn layer by layer in
// column-major order from mt19937_64(seed).
NetworkParams init_gaussian(const ArchSpec& arch, double scale, std::uint64_t seed);

}  // namespace dln
