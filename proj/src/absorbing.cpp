#include "dln/absorbing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dln/error.hpp"

namespace dln {

double f_alpha(double x, double alpha) {
  if (x <= 0.0) return 0.0;
  if (x > alpha) return 1.0;
  return x * (2.0 * alpha - x) / (alpha * alpha);
}

double f_alpha_derivative(double x, double alpha) {
  if (x > alpha) return 0.0;
  return 2.0 / alpha - 2.0 * x / (alpha * alpha);
}

double soft_rank_of_values(const Vector& values, double alpha) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) total += f_alpha(std::max(values(i), 0.0), alpha);
  return total;
}

double soft_rank(const Matrix& w, double alpha) {
  if (!(alpha > 0.0)) throw UsageError("soft_rank: alpha must be positive");
  if (w.size() == 0) return 0.0;
  // WᵀW and WWᵀ share their nonzero eigenvalues; the extra zeros add f_α(0) = 0.
  const Matrix gram = w.rows() >= w.cols() ? Matrix(w.transpose() * w) : Matrix(w * w.transpose());
  return soft_rank_of_values(symmetric_eigenvalues(gram), alpha);
}

BalanceReport balance_error(const NetworkParams& params) {
  if (params.depth() < 2) throw UsageError("balance_error: depth must be >= 2");
  BalanceReport out;
  for (int k = 0; k + 1 < params.depth(); ++k) {
    const Matrix& lower = params.weights[k];
    const Matrix& upper = params.weights[k + 1];
    const Matrix diff = lower * lower.transpose() - upper.transpose() * upper;
    const double spec = symmetric_spectral_norm(diff);
    const double fro = diff.norm();
    out.spectral.push_back(spec);
    out.frobenius.push_back(fro);
    out.max_spectral = std::max(out.max_spectral, spec);
    out.max_frobenius = std::max(out.max_frobenius, fro);
  }
  return out;
}

void AbsorbingSpec::validate() const {
  if (r < 0) throw UsageError("AbsorbingSpec: r must be >= 0");
  if (!(eps1 > 0.0)) throw UsageError("AbsorbingSpec: eps1 must be positive");
  if (!(eps2 > 0.0 && eps2 < 0.5)) throw UsageError("AbsorbingSpec: eps2 must lie in (0, 1/2)");
  if (!(alpha > 0.0)) throw UsageError("AbsorbingSpec: alpha must be positive");
  if (!(cap > 0.0)) throw UsageError("AbsorbingSpec: cap must be positive");
  if (n < 1) throw UsageError("AbsorbingSpec: n must be >= 1");
}

Membership membership(const NetworkParams& params, const AbsorbingSpec& spec) {
  Membership out;
  out.margin = std::numeric_limits<double>::infinity();
  auto check = [&](const char* clause, int layer, double value, double bound) {
    const double slack = bound - value;
    if (slack < 0.0 && out.member) {
      out.member = false;
      out.violated = clause;
      out.layer = layer;
      out.margin = slack;
    } else if (out.member) {
      out.margin = std::min(out.margin, slack);
    }
  };

  for (int k = 0; k < params.depth(); ++k) {
    const double norm_sq = params.weights[k].squaredNorm();
    out.max_norm_sq = std::max(out.max_norm_sq, norm_sq);
    check("norm", k + 1, norm_sq, spec.cap);
  }
  if (params.depth() >= 2) {
    const BalanceReport balance = balance_error(params);
    out.max_balance = balance.max_spectral;
    for (std::size_t k = 0; k < balance.spectral.size(); ++k)
      check("balance", static_cast<int>(k) + 1, balance.spectral[k], spec.eps1);
  }
  for (int k = 0; k < params.depth(); ++k) {
    const double sr = soft_rank(params.weights[k], spec.alpha);
    out.max_soft_rank = std::max(out.max_soft_rank, sr);
    check("soft_rank", k + 1, sr, spec.r + spec.eps2);
  }
  return out;
}

BoundReport admissible_bounds(double lambda, int depth, const ArchSpec& arch,
                              const CompletionProblem& problem, int r, double eps1, double eps2,
                              double cap, const BoundOptions& options) {
  if (depth < 3) throw UsageError("admissible_bounds: depth " + std::to_string(depth) +
                                  " unsupported, the alpha ceiling needs L >= 3");
  if (!(lambda > 0.0)) throw UsageError("admissible_bounds: lambda must be positive");
  if (!(eps1 > 0.0) || !(eps2 > 0.0) || !(cap > 0.0) || r < 0)
    throw UsageError("admissible_bounds: eps1, eps2, cap must be positive and r >= 0");

  const double L = depth;
  BoundReport rep;
  rep.c1 = problem.c1();
  rep.n_max = arch.max_dim();
  rep.n_min = arch.min_io();
  const double c1 = rep.c1;
  const double n = rep.n_max;
  const double cl = std::pow(cap, L);         // C^L
  const double cl1 = std::pow(cap, L - 1.0);  // C^{L−1}
  const double g_bound = 2.0 * (c1 + cl);     // bound on ‖G‖_F² inside the cap

  rep.cap_min_closure = c1 / (2.0 * lambda);
  rep.cap_min_travel = c1 / lambda;
  rep.cap_min = std::max(rep.cap_min_closure, rep.cap_min_travel);
  if (cap < rep.cap_min_closure) {
    rep.feasible = false;
    rep.reason = "cap " + std::to_string(cap) + " below C1/(2 lambda) = " +
                 std::to_string(rep.cap_min_closure);
  }

  rep.alpha_max = std::pow(lambda * lambda / g_bound, 1.0 / (L - 2.0));
  rep.alpha_used = options.alpha.value_or(rep.alpha_max);
  const double alpha = rep.alpha_used;
  if (options.alpha && alpha > rep.alpha_max && rep.feasible) {
    rep.feasible = false;
    rep.reason = "alpha above its ceiling";
  }

  const double sqrt_eps1_max = lambda * alpha * eps2 /
                               (32.0 * n * L * (r + 1) * std::pow(cap, (L - 1.0) / 2.0) *
                                std::sqrt(g_bound));
  rep.eps1_max = sqrt_eps1_max * sqrt_eps1_max;
  const double trailing = rep.n_min - r;
  rep.eps1_travel_max = trailing > 0 ? alpha * eps2 / (4.0 * trailing * (L - 1.0))
                                     : std::numeric_limits<double>::infinity();
  if (eps1 > rep.eps1_max && rep.feasible) {
    rep.feasible = false;
    rep.reason = "eps1 above its ceiling";
  }

  const double drift = g_bound * cl1 + lambda * lambda * cap;  // 2(C₁+C^L)C^{L−1} + λ²C
  rep.eta_norm = c1 / (4.0 * drift);
  rep.eta_balance = 2.0 * lambda * eps1 / (4.0 * (c1 + cl) * cl1 + lambda * lambda * eps1);
  rep.eta_rank = lambda * alpha * eps2 / (32.0 * n * (r + 1) * drift);
  rep.eta_step = 2.0 * (r + 1) / lambda;
  rep.eta_max = std::min({rep.eta_norm, rep.eta_balance, rep.eta_rank, rep.eta_step});

  rep.c0 = options.c0.value_or(cap);
  const double c0 = rep.c0;
  rep.eta_travel_norm =
      c1 / (4.0 * (2.0 * (c1 + std::pow(c0, L)) * std::pow(c0, L - 1.0) + lambda * lambda * c0));
  rep.eta_travel_balance = lambda * eps1 / (4.0 * (c1 + cl) * cl1 + 2.0 * lambda * lambda * cap);
  rep.eta_travel_max = std::min(rep.eta_travel_norm, rep.eta_travel_balance);

  rep.eta_used = options.eta.value_or(std::min(rep.eta_max, rep.eta_travel_max));
  const double eta = rep.eta_used;
  rep.t0_min = std::max(0.0, std::log(2.0 * c0 / eps1) / (eta * lambda));
  rep.t1_min = trailing > 0
                   ? std::max(0.0, std::log(4.0 * trailing * cap / (alpha * eps2)) /
                                       (2.0 * eta * lambda))
                   : 0.0;
  if (r == 0) {
    rep.jump_prob_lower_bound = rep.t1_min > 0 ? 0.0 : 1.0;
    rep.log10_jump_prob = rep.t1_min > 0 ? -std::numeric_limits<double>::infinity() : 0.0;
  } else {
    const double base = std::min(1.0, double(r) / rep.n_min);
    const double steps = std::ceil(rep.t1_min);
    rep.log10_jump_prob = steps * std::log10(base);
    rep.jump_prob_lower_bound = std::pow(base, steps);
  }
  return rep;
}

Matrix spectral_gradient(const Matrix& a, double alpha) {
  if (!(alpha > 0.0)) throw UsageError("spectral_gradient: alpha must be positive");
  const SymmetricEigen eig = symmetric_eigen(a);
  Vector d(eig.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = f_alpha_derivative(eig.values(i), alpha);
  return eig.vectors * d.asDiagonal() * eig.vectors.transpose();
}

double output_soft_rank(const NetworkParams& params, double alpha) {
  const Vector s = singular_values(forward_product(params));
  return soft_rank_of_values(s.cwiseProduct(s), alpha);
}

double output_soft_rank_ceiling(const AbsorbingSpec& spec, int depth) {
  const double L = depth;
  return spec.r + spec.eps2 + spec.n * L * L / spec.alpha * std::pow(spec.cap, L - 1.0) * spec.eps1;
}

double balanced_soft_rank(const Matrix& a, int depth, double alpha) {
  const Vector s = singular_values(a);
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) >= kZeroSingularValue) total += f_alpha(std::pow(s(i), 2.0 / depth), alpha);
  return total;
}

}  // namespace dln
