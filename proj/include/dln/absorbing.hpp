#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dln/linnet.hpp"
#include "dln/objective.hpp"

namespace dln {

// f_α(x) = x(2α − x)/α² on [0, α], 1 beyond.
double f_alpha(double x, double alpha);
// f_α′(x) = 2/α − 2x/α² on [0, α], 0 beyond.
double f_alpha_derivative(double x, double alpha);

// Σᵢ f_α(λᵢ(WᵀW)); the squared singular values of W.
double soft_rank(const Matrix& w, double alpha);

// Σ f_α over a vector of (nonnegative) spectral values; negatives count as 0.
double soft_rank_of_values(const Vector& values, double alpha);

struct BalanceReport {
  // Entry k is ‖W_k W_kᵀ − W_{k+1}ᵀ W_{k+1}‖ for the consecutive pair (k, k+1), one-based.
  std::vector<double> spectral;
  std::vector<double> frobenius;
  double max_spectral = 0.0;
  double max_frobenius = 0.0;
};

// Requires depth ≥ 2.
BalanceReport balance_error(const NetworkParams& params);

// Parameters of the absorbing set B_r = B_{C,ε₁} ∩ B_{r,ε₂}.
struct AbsorbingSpec {
  int r = 0;
  double eps1 = 0.0;   // spectral balance slack
  double eps2 = 0.0;   // soft-rank slack, < 1/2
  double alpha = 0.0;  // soft-rank knee
  double cap = 0.0;    // per-layer ‖W‖_F² cap C
  int n = 0;           // largest weight-matrix dimension

  void validate() const;
};

struct Membership {
  bool member = true;
  // "norm", "balance" or "soft_rank" for the first violated clause; empty if member.
  std::string violated;
  int layer = 0;         // one-based layer (or pair) of the first violation
  double margin = 0.0;   // bound − value of the tightest clause (negative when violated)
  double max_norm_sq = 0.0;
  double max_balance = 0.0;
  double max_soft_rank = 0.0;
};

Membership membership(const NetworkParams& params, const AbsorbingSpec& spec);

// Constants of the closure and reachability theorems.
struct BoundReport {
  bool feasible = true;
  std::string reason;

  double c1 = 0.0;
  int n_max = 0;  // largest weight dimension (closure constants)
  int n_min = 0;  // min(d_in, d_out) (reachability constants)

  double alpha_max = 0.0;
  double alpha_used = 0.0;
  double eps1_max = 0.0;         // closure ceiling on ε₁ given alpha_used
  double eps1_travel_max = 0.0;  // αε₂ / (4(n−r)(L−1))

  double eta_norm = 0.0;
  double eta_balance = 0.0;
  double eta_rank = 0.0;
  double eta_step = 0.0;
  double eta_max = 0.0;  // min of the four above

  double eta_travel_norm = 0.0;
  double eta_travel_balance = 0.0;
  double eta_travel_max = 0.0;

  double cap_min_closure = 0.0;  // C₁/(2λ)
  double cap_min_travel = 0.0;   // C₁/λ
  double cap_min = 0.0;          // stricter of the two

  double eta_used = 0.0;
  double c0 = 0.0;
  double t0_min = 0.0;
  double t1_min = 0.0;
  double jump_prob_lower_bound = 0.0;
  double log10_jump_prob = 0.0;
};

struct BoundOptions {
  std::optional<double> alpha;  // defaults to alpha_max
  std::optional<double> eta;    // η used for T₀/T₁; defaults to min(eta_max, eta_travel_max)
  std::optional<double> c0;     // max_ℓ ‖W_ℓ(0)‖_F²; defaults to cap
};

// Throws UsageError for depth < 3; a cap below C₁/(2λ) yields feasible = false.
BoundReport admissible_bounds(double lambda, int depth, const ArchSpec& arch,
                              const CompletionProblem& problem, int r, double eps1, double eps2,
                              double cap, const BoundOptions& options = {});

// U diag(f_α′(λᵢ)) Uᵀ for symmetric A = U diag(λ) Uᵀ.
Matrix spectral_gradient(const Matrix& a, double alpha);

// Σᵢ f_α(sᵢ(A_θ)²).
double output_soft_rank(const NetworkParams& params, double alpha);

// r + ε₂ + (n L²/α) C^{L−1} ε₁.
double output_soft_rank_ceiling(const AbsorbingSpec& spec, int depth);

// Σᵢ f_α(sᵢ(A)^{2/L}): the per-layer soft rank a balanced factorization of A would have.
double balanced_soft_rank(const Matrix& a, int depth, double alpha);

}  // namespace dln
