#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dln/linnet.hpp"
#include "dln/objective.hpp"

namespace dln {

struct ConvergeResult {
  NetworkParams params;
  bool converged = false;
  long steps = 0;
  double grad_norm = 0.0;
  double loss = 0.0;
  double eta = 0.0;  // step size in effect at exit
};

// Gradient descent on L_λ until ‖∇L_λ‖ ≤ grad_tol, halving η whenever a step
// would increase the loss beyond rounding (the step is then retried).
ConvergeResult converge(const NetworkParams& start, const CompletionProblem& problem, double lambda,
                        double eta, double grad_tol, long max_steps);

// Number of singular values above tol·s₁ (0 for the zero matrix).
int numeric_rank(const Matrix& a, double tol = 1e-6);

enum class MinimumClass { rank_underestimating, exact, rank_overestimating };

std::string to_string(MinimumClass c);

MinimumClass classify_rank(int rank, int r_star);

struct HessianEstimate {
  double value = 0.0;     // Rayleigh quotient of the best probe
  double residual = 0.0;  // ‖Hv − value·v‖
  int iterations = 0;
  bool confident = false;
};

// Smallest eigenvalue of ∇²L_λ(θ) by shifted power iteration on central
// difference Hessian-vector products of the analytic gradient.
HessianEstimate hessian_min_eig(const NetworkParams& params, const CompletionProblem& problem,
                                double lambda, int probes = 3, int iters = 500,
                                std::uint64_t seed = 0);

// H v by central differences of full_gradient with h = 1e-5 (1 + ‖θ‖).
LayerGradients hessian_vector_product(const NetworkParams& params,
                                      const CompletionProblem& problem, double lambda,
                                      const LayerGradients& direction);

struct MinimumReport {
  NetworkParams params;
  double grad_norm = 0.0;
  double balance_error = 0.0;  // max spectral
  int rank = 0;
  int r_star = 0;
  MinimumClass classification = MinimumClass::exact;
  double cost = 0.0;
  std::vector<double> singular_values;
  std::optional<HessianEstimate> hessian;
};

struct ClassifyOptions {
  double rank_tol = 1e-6;
  double zero_tol = 1e-8;  // A_θ with s₁ at or below this counts as rank 0
  double stationarity_tol = 1e-6;  // ‖∇L_λ‖ above this is a usage error
  bool hessian = false;
  int hessian_probes = 3;
  int hessian_iters = 500;
};

MinimumReport classify_minimum(const NetworkParams& params, const CompletionProblem& problem,
                               double lambda, int r_star, const ClassifyOptions& options = {});

struct ContinuationPoint {
  double lambda = 0.0;
  NetworkParams params;
  double cost = 0.0;
  double norm_sq = 0.0;
  int rank = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

struct ContinuationResult {
  std::vector<ContinuationPoint> points;
  bool structure_lost = false;
  std::string reason;
};

struct ContinuationOptions {
  double eta = 0.05;
  double grad_tol = 1e-10;
  long max_steps = 200000;
  double rank_tol = 1e-6;
  double zero_tol = 1e-8;
};

// Warm-started converge along a strictly decreasing λ grid. Stops after the
// first point whose numeric rank differs from r_star.
ContinuationResult lambda_continuation(const CompletionProblem& problem, int r_star,
                                       const std::vector<double>& lambda_grid,
                                       const NetworkParams& start,
                                       const ContinuationOptions& options = {});

}  // namespace dln
