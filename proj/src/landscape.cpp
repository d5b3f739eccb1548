#include "dln/landscape.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "dln/absorbing.hpp"
#include "dln/error.hpp"

namespace dln {

namespace {

void axpy(NetworkParams& params, double a, const LayerGradients& g) {
  for (int k = 0; k < params.depth(); ++k) params.weights[k] += a * g.layers[k];
}

double dot(const LayerGradients& a, const LayerGradients& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k) s += a.layers[k].cwiseProduct(b.layers[k]).sum();
  return s;
}

void scale(LayerGradients& a, double c) {
  for (Matrix& m : a.layers) m *= c;
}

void add_scaled(LayerGradients& a, double c, const LayerGradients& b) {
  for (std::size_t k = 0; k < a.layers.size(); ++k) a.layers[k] += c * b.layers[k];
}

}  // namespace

ConvergeResult converge(const NetworkParams& start, const CompletionProblem& problem, double lambda,
                        double eta, double grad_tol, long max_steps) {
  if (!(grad_tol > 0.0)) throw UsageError("converge: grad_tol must be positive");
  if (!(eta > 0.0)) throw UsageError("converge: eta must be positive");
  ConvergeResult out;
  out.params = start;
  out.eta = eta;
  out.loss = regularized_loss(out.params, problem, lambda);
  LayerGradients grad = full_gradient(out.params, problem, lambda);
  out.grad_norm = grad.norm();
  while (out.grad_norm > grad_tol && out.steps < max_steps) {
    NetworkParams next = out.params;
    axpy(next, -out.eta, grad);
    const double loss = regularized_loss(next, problem, lambda);
    // Increases at the rounding level of the loss are not evidence of overshoot.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(out.loss);
    if (!std::isfinite(loss) || loss > out.loss + slack) {
      out.eta *= 0.5;
      if (out.eta < 1e-300) break;
      continue;
    }
    out.params = std::move(next);
    out.loss = loss;
    grad = full_gradient(out.params, problem, lambda);
    out.grad_norm = grad.norm();
    ++out.steps;
  }
  out.converged = out.grad_norm <= grad_tol;
  return out;
}

int numeric_rank(const Matrix& a, double tol) {
  if (!(tol > 0.0)) throw UsageError("numeric_rank: tol must be positive");
  if (a.size() == 0) return 0;
  const Vector s = singular_values(a);
  if (!(s(0) > 0.0)) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++rank;
  return rank;
}

namespace {

// Minima at the origin are only reached up to the gradient tolerance.
int stationary_rank(const Matrix& a, double rank_tol, double zero_tol) {
  if (a.size() == 0 || singular_values(a)(0) <= zero_tol) return 0;
  return numeric_rank(a, rank_tol);
}

}  // namespace

std::string to_string(MinimumClass c) {
  switch (c) {
    case MinimumClass::rank_underestimating: return "rank-underestimating";
    case MinimumClass::exact: return "exact";
    case MinimumClass::rank_overestimating: return "rank-overestimating";
  }
  return "exact";
}

MinimumClass classify_rank(int rank, int r_star) {
  if (rank < r_star) return MinimumClass::rank_underestimating;
  if (rank > r_star) return MinimumClass::rank_overestimating;
  return MinimumClass::exact;
}

LayerGradients hessian_vector_product(const NetworkParams& params,
                                      const CompletionProblem& problem, double lambda,
                                      const LayerGradients& direction) {
  const double h = 1e-5 * (1.0 + std::sqrt(param_norm_sq(params)));
  const double dnorm = direction.norm();
  if (dnorm == 0.0) {
    LayerGradients zero = direction;
    return zero;
  }
  // Step along the unit direction so h is an absolute displacement.
  const double t = h / dnorm;
  NetworkParams plus = params, minus = params;
  axpy(plus, t, direction);
  axpy(minus, -t, direction);
  LayerGradients gp = full_gradient(plus, problem, lambda);
  const LayerGradients gm = full_gradient(minus, problem, lambda);
  add_scaled(gp, -1.0, gm);
  scale(gp, 1.0 / (2.0 * t));
  return gp;
}

HessianEstimate hessian_min_eig(const NetworkParams& params, const CompletionProblem& problem,
                                double lambda, int probes, int iters, std::uint64_t seed) {
  if (probes < 1 || iters < 1) throw UsageError("hessian_min_eig: probes and iters must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_direction = [&] {
    LayerGradients v;
    for (const Matrix& w : params.weights) {
      Matrix m(w.rows(), w.cols());
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
      v.layers.push_back(std::move(m));
    }
    scale(v, 1.0 / v.norm());
    return v;
  };
  auto hv = [&](const LayerGradients& v) {
    return hessian_vector_product(params, problem, lambda, v);
  };

  // Largest |eigenvalue| bounds the spectrum; shifting by it makes the
  // smallest eigenvalue dominant.
  LayerGradients v = random_direction();
  double top = 0.0;
  for (int k = 0; k < std::min(iters, 200); ++k) {
    LayerGradients w = hv(v);
    const double n = w.norm();
    if (n == 0.0) break;
    top = n;
    scale(w, 1.0 / n);
    v = std::move(w);
  }
  const double shift = 1.1 * top + 1e-8;

  HessianEstimate best;
  best.value = std::numeric_limits<double>::infinity();
  for (int p = 0; p < probes; ++p) {
    LayerGradients x = random_direction();
    double rayleigh = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < iters; ++it) {
      const LayerGradients hx = hv(x);
      rayleigh = dot(x, hx);
      LayerGradients r = hx;
      add_scaled(r, -rayleigh, x);
      residual = r.norm();
      if (residual <= 1e-9 * std::max(1.0, std::abs(shift))) break;
      // y = (shift·I − H) x
      LayerGradients y = x;
      scale(y, shift);
      add_scaled(y, -1.0, hx);
      const double n = y.norm();
      if (n == 0.0) break;
      scale(y, 1.0 / n);
      x = std::move(y);
    }
    if (rayleigh < best.value) {
      best.value = rayleigh;
      best.residual = residual;
      best.iterations = it;
    }
  }
  best.confident = best.residual <= 1e-5 * std::max(1.0, std::abs(shift));
  return best;
}

MinimumReport classify_minimum(const NetworkParams& params, const CompletionProblem& problem,
                               double lambda, int r_star, const ClassifyOptions& options) {
  MinimumReport report;
  report.params = params;
  report.grad_norm = full_gradient(params, problem, lambda).norm();
  if (report.grad_norm > options.stationarity_tol)
    throw UsageError("classify_minimum: point is not stationary (gradient norm " +
                     std::to_string(report.grad_norm) + ")");
  report.balance_error = params.depth() >= 2 ? balance_error(params).max_spectral : 0.0;
  const Matrix a = forward_product(params);
  report.rank = stationary_rank(a, options.rank_tol, options.zero_tol);
  report.r_star = r_star;
  report.classification = classify_rank(report.rank, r_star);
  report.cost = cost(a, problem);
  const Vector s = singular_values(a);
  report.singular_values.assign(s.data(), s.data() + s.size());
  if (options.hessian)
    report.hessian =
        hessian_min_eig(params, problem, lambda, options.hessian_probes, options.hessian_iters);
  return report;
}

ContinuationResult lambda_continuation(const CompletionProblem& problem, int r_star,
                                       const std::vector<double>& lambda_grid,
                                       const NetworkParams& start,
                                       const ContinuationOptions& options) {
  for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
    if (!(lambda_grid[k] > 0.0)) throw UsageError("lambda_continuation: lambdas must be positive");
    if (k > 0 && !(lambda_grid[k] < lambda_grid[k - 1]))
      throw UsageError("lambda_continuation: lambda grid must be strictly decreasing");
  }
  ContinuationResult out;
  NetworkParams current = start;
  for (double lambda : lambda_grid) {
    const ConvergeResult c =
        converge(current, problem, lambda, options.eta, options.grad_tol, options.max_steps);
    ContinuationPoint p;
    p.lambda = lambda;
    p.params = c.params;
    const Matrix a = forward_product(c.params);
    p.cost = cost(a, problem);
    p.norm_sq = param_norm_sq(c.params);
    p.rank = stationary_rank(a, options.rank_tol, options.zero_tol);
    p.grad_norm = c.grad_norm;
    p.converged = c.converged;
    out.points.push_back(std::move(p));
    if (out.points.back().rank != r_star) {
      out.structure_lost = true;
      out.reason = "numeric rank " + std::to_string(out.points.back().rank) + " at lambda " +
                   std::to_string(lambda) + " differs from " + std::to_string(r_star);
      break;
    }
    current = c.params;
  }
  return out;
}

}  // namespace dln
