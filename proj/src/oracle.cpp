#include "dln/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "dln/error.hpp"

namespace dln {

LayerGradients fd_gradient(const NetworkParams& params, const CompletionProblem& problem,
                           double lambda, double h) {
  if (!(h > 0.0)) throw UsageError("fd_gradient: h must be positive");
  LayerGradients out;
  NetworkParams probe = params;
  for (int k = 0; k < params.depth(); ++k) {
    Matrix g(params.weights[k].rows(), params.weights[k].cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double w = params.weights[k](i, j);
        probe.weights[k](i, j) = w + h;
        const double up = regularized_loss(probe, problem, lambda);
        probe.weights[k](i, j) = w - h;
        const double down = regularized_loss(probe, problem, lambda);
        probe.weights[k](i, j) = w;
        g(i, j) = (up - down) / (2.0 * h);
      }
    out.layers.push_back(std::move(g));
  }
  return out;
}

JacobiResult jacobi_eigs(const Matrix& s, double tol, int max_sweeps) {
  if (s.rows() != s.cols()) throw UsageError("jacobi_eigs: matrix must be square");
  const Eigen::Index n = s.rows();
  Matrix a = 0.5 * (s + s.transpose());
  Matrix v = Matrix::Identity(n, n);
  auto off = [&] {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) sum += a(i, j) * a(i, j);
    return std::sqrt(sum);
  };
  JacobiResult out;
  while (off() > tol) {
    if (out.sweeps >= max_sweeps)
      throw NumericalError("jacobi_eigs: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps (off-diagonal norm " + std::to_string(off()) + ")");
    for (Eigen::Index p = 0; p < n - 1; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    ++out.sweeps;
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

NetworkParams sample_member(const AbsorbingSpec& spec, const ArchSpec& arch, Rng& rng,
                            const SamplerOptions& options) {
  spec.validate();
  arch.validate();
  const int depth = arch.depth;
  const int k_max = arch.min_io();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    // Squared layer singular values x_i; the output's are x_i^{L/2}.
    Vector x = Vector::Zero(k_max);
    const int head = std::min(spec.r, k_max);
    const int rank = head == 0 ? 0 : 1 + static_cast<int>(unit(rng) * head) % head;
    double budget = options.cap_fill * spec.cap * unit(rng);
    std::vector<double> weights(rank);
    double total = 0.0;
    for (double& w : weights) total += (w = 0.05 + unit(rng));
    for (int i = 0; i < rank; ++i) x(i) = budget * weights[i] / total;
    // Trailing directions below the knee, spending part of the ε₂ budget.
    if (rank < k_max) {
      const double tail_budget = options.tail_fill * spec.eps2 * unit(rng);
      const int tail = k_max - rank;
      for (int i = rank; i < k_max; ++i) {
        // f_α(x) ≤ 2x/α, so x = α·share/2 spends at most `share`.
        const double share = tail_budget / tail * unit(rng);
        x(i) = 0.5 * spec.alpha * share;
      }
    }
    // Keep the total norm under the cap after adding the tail.
    const double sum = x.sum();
    if (sum > options.cap_fill * spec.cap) x *= options.cap_fill * spec.cap / sum;

    Vector s(k_max);
    for (int i = 0; i < k_max; ++i) s(i) = std::pow(x(i), 0.5 * depth);
    const Matrix u = random_orthonormal(arch.d_out(), k_max, rng);
    const Matrix v = random_orthonormal(arch.d_in(), k_max, rng);
    const Matrix a = u * s.asDiagonal() * v.transpose();
    NetworkParams params = balanced_factorization(a, arch);

    // Gauge W_ℓ → Q_ℓ W_ℓ Q_{ℓ−1}ᵀ on hidden layers keeps the balance exact.
    for (int k = 0; k + 1 < depth; ++k) {
      const int w = arch.widths[k + 1];
      const Matrix q = random_orthonormal(w, w, rng);
      params.weights[k] = q * params.weights[k];
      params.weights[k + 1] = params.weights[k + 1] * q.transpose();
    }
    // ‖(W+D)(W+D)ᵀ − WWᵀ‖₂ ≤ 2‖W‖₂‖D‖₂ + ‖D‖₂², and likewise for the next layer.
    double wmax = 0.0;
    for (const Matrix& w : params.weights) wmax = std::max(wmax, singular_values(w)(0));
    const double target = options.perturb_fill * spec.eps1 * unit(rng);
    const double delta = target / (4.0 * (wmax + 1.0));
    for (Matrix& w : params.weights) {
      Matrix d(w.rows(), w.cols());
      for (Eigen::Index j = 0; j < d.cols(); ++j)
        for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, j) = normal(rng);
      const double dn = d.norm();
      if (dn > 0.0) w += (delta / dn) * d;
    }
    if (membership(params, spec).member) return params;
  }
  throw NumericalError("sample_member: no member of B found in " +
                       std::to_string(options.max_attempts) + " attempts");
}

ClosureReport closure_monte_carlo(const AbsorbingSpec& spec, double lambda, const ArchSpec& arch,
                                  const CompletionProblem& problem, int trials, long steps,
                                  std::uint64_t seed, const ClosureOptions& options) {
  ClosureReport report;
  report.trials = std::max(trials, 0);
  report.steps_per_trial = steps;
  report.asserting = options.asserting;
  if (trials <= 0) return report;

  const BoundReport bounds = admissible_bounds(lambda, arch.depth, arch, problem, spec.r, spec.eps1,
                                               spec.eps2, spec.cap, {spec.alpha, {}, {}});
  report.eta = options.eta.value_or(bounds.eta_max);
  if (options.asserting) {
    if (!bounds.feasible)
      throw UsageError("closure_monte_carlo: parameters are not admissible: " + bounds.reason);
    if (report.eta > bounds.eta_max)
      throw UsageError("closure_monte_carlo: eta above the admissible ceiling");
  }

  std::vector<std::vector<ClosureViolation>> found(trials);
  std::vector<long> checks(trials, 0);
  auto trial = [&](int t) {
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(t)));
    NetworkParams params = sample_member(spec, arch, rng, options.sampler);
    for (long s = 1; s <= steps; ++s) {
      try {
        sgd_step_inplace(params, problem, report.eta, lambda, rng, options.decay, s - 1);
      } catch (const DivergenceError&) {
        Membership m;
        m.member = false;
        m.violated = "divergence";
        found[t].push_back({t, s, m, params});
        return;
      }
      const Membership m = membership(params, spec);
      ++checks[t];
      if (!m.member) {
        found[t].push_back({t, s, m, params});
        if (options.asserting) return;
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(trials)));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int t = static_cast<int>(w); t < trials; t += static_cast<int>(workers)) trial(t);
    });
  for (std::thread& th : pool) th.join();
  for (int t = 0; t < trials; ++t) {
    report.step_checks += checks[t];
    for (ClosureViolation& v : found[t]) report.violations.push_back(std::move(v));
  }
  return report;
}

ReachabilityReport forced_column_reachability(const NetworkParams& start,
                                              const AbsorbingSpec& spec,
                                              const CompletionProblem& problem, double eta,
                                              double lambda, long steps, std::uint64_t seed,
                                              DecayConvention decay) {
  if (!(eta > 0.0) || lambda < 0.0 || steps < 0)
    throw UsageError("forced_column_reachability: need eta > 0, lambda >= 0, steps >= 0");
  ReachabilityReport report;
  const ArchSpec& arch = start.arch;
  const int depth = start.depth();
  const int n = arch.min_io();
  const int r = std::min(spec.r, n);
  report.transpose = arch.d_out() < arch.d_in();

  // Rank columns (or rows) by observed count, ties to the lower index.
  const int lines = report.transpose ? problem.rows() : problem.cols();
  std::vector<int> count(lines, 0);
  for (const Entry& e : problem.observed()) ++count[report.transpose ? e.row : e.col];
  std::vector<int> order(lines);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return count[a] > count[b]; });
  report.forced.assign(order.begin(), order.begin() + r);
  std::vector<Entry> pool;
  for (const Entry& e : problem.observed())
    if (std::find(report.forced.begin(), report.forced.end(),
                  report.transpose ? e.row : e.col) != report.forced.end())
      pool.push_back(e);

  NetworkParams params = start;
  const double decay_rate = 1.0 - eta * lambda;
  auto check_envelope = [&](long t) {
    const double shrink = std::pow(decay_rate, 2.0 * t) * spec.cap;
    for (int k = 0; k < depth; ++k) {
      // Distance in layers from the forced side: ℓ − 1, or L − ℓ when transposed.
      const int distance = report.transpose ? depth - 1 - k : k;
      const double envelope = shrink + distance * spec.eps1;
      const Vector s = singular_values(params.weights[k]);
      for (Eigen::Index i = r; i < s.size(); ++i) {
        const double value = s(i) * s(i);
        ++report.envelope_checks;
        report.worst_ratio = std::max(report.worst_ratio, value / envelope);
        if (value > envelope) ++report.envelope_violations;
      }
      if (k == (report.transpose ? depth - 1 : 0))
        report.trailing_w1.push_back(r < s.size() ? s(r) : 0.0);
    }
    if (depth >= 2 && balance_error(params).max_spectral > spec.eps1)
      report.stayed_balanced = false;
  };

  if (r < n && !pool.empty()) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    check_envelope(0);
    for (long t = 1; t <= steps; ++t) {
      sgd_update_entry(params, problem, pool[pick(rng)], eta, lambda, decay, t - 1);
      check_envelope(t);
    }
    report.steps = steps;
  }
  report.final_membership = membership(params, spec);
  for (int k = 0; k < depth; ++k) {
    const Vector s = singular_values(params.weights[k]);
    report.final_trailing.push_back(r < s.size() ? s(r) : 0.0);
  }
  return report;
}

namespace {

NormSearchResult norm_search_once(const Matrix& a, const ArchSpec& arch, std::uint64_t seed,
                                  const std::vector<double>& mus, long steps_per_mu,
                                  double init_scale, bool seed_residual) {
  NormSearchResult out;
  out.params = init_gaussian(arch, init_scale, seed);
  const int depth = arch.depth;
  auto objective = [&](const NetworkParams& p, double mu) {
    return param_norm_sq(p) + (forward_product(p) - a).squaredNorm() / mu;
  };
  Rng rng(split_seed(seed, 1));
  std::normal_distribution<double> kick(0.0, 1e-3 * init_scale);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (double mu : mus) {
    // Re-seed directions that collapsed at the previous, larger mu.
    for (Matrix& w : out.params.weights)
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] += kick(rng);
    double value = objective(out.params, mu);
    // Deep layers cannot grow a missing direction from near zero, so offer
    // the top residual direction as a balanced rank-one term.
    if (seed_residual) {
      const Eigen::JacobiSVD<Matrix> svd(a - forward_product(out.params),
                                         Eigen::ComputeThinU | Eigen::ComputeThinV);
      const double c = std::pow(svd.singularValues()(0), 1.0 / depth);
      if (c > 0.0) {
        NetworkParams seeded = out.params;
        Vector prev = svd.matrixV().col(0);
        for (int k = 0; k < depth; ++k) {
          Vector next = svd.matrixU().col(0);
          if (k + 1 < depth) {
            // Hidden direction outside range(W_k) and the row space of W_{k+1}.
            const int h = arch.widths[k + 1];
            Matrix used(h, arch.widths[k] + arch.widths[k + 2]);
            used << out.params.weights[k], out.params.weights[k + 1].transpose();
            const Eigen::JacobiSVD<Matrix> us(used, Eigen::ComputeFullU);
            const Vector& sv = us.singularValues();
            int taken = 0;
            while (taken < sv.size() && sv(taken) > 1e-3 * sv(0)) ++taken;
            next = Vector(h);
            for (Eigen::Index i = 0; i < h; ++i) next(i) = unit(rng);
            const Matrix basis = us.matrixU().leftCols(taken);
            next -= basis * (basis.transpose() * next);
            if (next.norm() < 1e-8) {
              seeded.weights.clear();
              break;
            }
            next.normalize();
          }
          seeded.weights[k] += c * next * prev.transpose();
          prev = next;
        }
        const double v = seeded.weights.empty() ? INFINITY : objective(seeded, mu);
        if (v < value) {
          out.params = std::move(seeded);
          value = v;
        }
      }
    }
    double eta = 0.1 * mu;
    for (long s = 0; s < steps_per_mu; ++s) {
      const Matrix residual = forward_product(out.params) - a;
      NetworkParams next = out.params;
      for (int k = 0; k < depth; ++k)
        next.weights[k] -= eta * (2.0 * out.params.weights[k] +
                                  (2.0 / mu) * layer_gradient(out.params, residual, k));
      const double v = objective(next, mu);
      if (!std::isfinite(v) || v > value) {
        eta *= 0.5;
        if (eta < 1e-300) break;
        continue;
      }
      out.params = std::move(next);
      value = v;
      eta *= 1.2;
      ++out.steps;
    }
  }
  out.norm_sq = param_norm_sq(out.params);
  out.residual = (forward_product(out.params) - a).norm();
  return out;
}

}  // namespace

NormSearchResult penalized_norm_search(const Matrix& a, const ArchSpec& arch, std::uint64_t seed,
                                       const std::vector<double>& mus, long steps_per_mu,
                                       const NormSearchOptions& options) {
  if (mus.empty()) throw UsageError("penalized_norm_search: no mu values");
  for (double mu : mus)
    if (!(mu > 0.0)) throw UsageError("penalized_norm_search: mu must be positive");
  if (options.restarts < 1) throw UsageError("penalized_norm_search: restarts must be >= 1");
  NormSearchResult best;
  bool have_fit = false;
  bool have_any = false;
  long steps = 0;
  for (int k = 0; k < 2 * options.restarts; ++k) {
    NormSearchResult r = norm_search_once(a, arch, split_seed(seed, k), mus, steps_per_mu,
                                          options.init_scale, k >= options.restarts);
    steps += r.steps;
    const bool fit = r.residual <= options.fit_tol;
    if (fit ? (!have_fit || r.norm_sq < best.norm_sq)
            : (!have_fit && (!have_any || r.residual < best.residual))) {
      best = std::move(r);
      have_fit = have_fit || fit;
    }
    have_any = true;
  }
  best.steps = steps;
  best.fitted = have_fit;
  return best;
}

}  // namespace dln
