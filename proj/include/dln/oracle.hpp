#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dln/absorbing.hpp"
#include "dln/linnet.hpp"
#include "dln/objective.hpp"
#include "dln/optimizer.hpp"

namespace dln {

// Central differences of regularized_loss, one weight entry at a time.
LayerGradients fd_gradient(const NetworkParams& params, const CompletionProblem& problem,
                           double lambda, double h = 1e-5);

struct JacobiResult {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns matching `values`
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is ≤ tol.
// Throws NumericalError after max_sweeps sweeps.
JacobiResult jacobi_eigs(const Matrix& s, double tol = 1e-13, int max_sweeps = 100);

struct SamplerOptions {
  // Squared layer singular values of the rank-≤r part are drawn so their sum
  // fills at most this fraction of the cap.
  double cap_fill = 0.95;
  // Fraction of the ε₂ budget spent on sub-knee trailing singular values.
  double tail_fill = 0.9;
  // Fraction of ε₁ used by the random per-layer perturbation.
  double perturb_fill = 0.9;
  int max_attempts = 1000;
};

// Rejection sampler for B_r: balanced factorization of a random matrix of rank
// ≤ r (plus sub-knee trailing directions), a random orthogonal gauge on the
// hidden layers and a small perturbation, kept only if membership holds.
NetworkParams sample_member(const AbsorbingSpec& spec, const ArchSpec& arch, Rng& rng,
                            const SamplerOptions& options = {});

struct ClosureViolation {
  int trial = 0;
  long step = 0;  // steps taken when the violation was observed
  Membership verdict;
  NetworkParams params;
};

struct ClosureReport {
  int trials = 0;
  long steps_per_trial = 0;
  long step_checks = 0;
  double eta = 0.0;
  bool asserting = true;
  std::vector<ClosureViolation> violations;
};

struct ClosureOptions {
  std::optional<double> eta;  // defaults to admissible_bounds(...).eta_max
  bool asserting = true;      // asserting mode requires eta ≤ eta_max
  DecayConvention decay = DecayConvention::appendix;
  SamplerOptions sampler;
};

// Samples `trials` members of B, runs `steps` SGD steps from each and checks
// membership after every step. Trials run on separate threads with streams
// split from `seed`.
ClosureReport closure_monte_carlo(const AbsorbingSpec& spec, double lambda, const ArchSpec& arch,
                                  const CompletionProblem& problem, int trials, long steps,
                                  std::uint64_t seed, const ClosureOptions& options = {});

struct ReachabilityReport {
  bool transpose = false;    // true when rows (not columns) were forced
  std::vector<int> forced;   // the r columns (or rows) with the most observed entries
  long steps = 0;
  long envelope_checks = 0;
  long envelope_violations = 0;
  double worst_ratio = 0.0;  // max over checks of sᵢ² / envelope
  bool stayed_balanced = true;
  Membership final_membership;
  std::vector<double> final_trailing;  // s_{r+1}(W_ℓ) per layer at the end
  std::vector<double> trailing_w1;     // s_{r+1} of the first forced layer after each step
};

// Runs `steps` SGD steps drawing entries only from the r most observed
// columns (rows when d_out < d_in) and checks, after every step, that for
// i > r: sᵢ(W_ℓ(t))² ≤ (1−ηλ)^{2t} C + (ℓ−1) ε₁, layers counted from the
// forced side.
ReachabilityReport forced_column_reachability(const NetworkParams& start,
                                              const AbsorbingSpec& spec,
                                              const CompletionProblem& problem, double eta,
                                              double lambda, long steps, std::uint64_t seed,
                                              DecayConvention decay = DecayConvention::appendix);

struct NormSearchResult {
  NetworkParams params;
  double norm_sq = 0.0;   // ‖θ‖² at the end of the last stage
  double residual = 0.0;  // ‖A_θ − A‖_F at the end of the last stage
  long steps = 0;         // accepted steps over all restarts
  bool fitted = false;    // residual <= fit_tol
};

struct NormSearchOptions {
  double init_scale = 1.0;
  int restarts = 4;
  double fit_tol = 1e-4;
};

// Minimizes ‖θ‖² + ‖A_θ − A‖_F²/μ by backtracking gradient descent for each μ
// in turn, warm-starting from a Gaussian draw. Each stage starts with a small
// kick. `restarts` runs are plain; another `restarts` runs also offer the top
// residual direction as a rank-one term on unused hidden directions at each
// stage. Of the runs that fit A within fit_tol, the lowest norm is kept; if
// none fit, the lowest residual.
NormSearchResult penalized_norm_search(const Matrix& a, const ArchSpec& arch, std::uint64_t seed,
                                       const std::vector<double>& mus, long steps_per_mu,
                                       const NormSearchOptions& options = {});

}  // namespace dln
