#include "dln/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dln/error.hpp"

namespace dln {

std::string to_string(DecayConvention convention) {
  switch (convention) {
    case DecayConvention::appendix: return "appendix";
    case DecayConvention::main: return "main";
    case DecayConvention::sample_loss: return "sample_loss";
  }
  return "appendix";
}

DecayConvention parse_decay_convention(std::string_view text) {
  if (text == "appendix") return DecayConvention::appendix;
  if (text == "main") return DecayConvention::main;
  if (text == "sample_loss") return DecayConvention::sample_loss;
  throw UsageError("unknown decay convention '" + std::string(text) + "'");
}

Schedule::Schedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
  long previous = 0;
  for (const Segment& s : segments_) {
    if (s.end_step <= previous && !(s.end_step == 0 && previous == 0 && segments_.size() == 1))
      throw UsageError("Schedule: end steps must be strictly increasing and positive");
    if (!(s.eta > 0.0)) throw UsageError("Schedule: eta must be positive");
    if (s.lambda < 0.0) throw UsageError("Schedule: lambda must be nonnegative");
    previous = s.end_step;
  }
}

Schedule Schedule::constant(long total_steps, double eta, double lambda) {
  return Schedule({{total_steps, eta, lambda}});
}

std::size_t Schedule::segment_index(long step) const {
  if (step < 0 || step >= total_steps())
    throw UsageError("schedule: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(total_steps()) + ")");
  const auto it = std::upper_bound(segments_.begin(), segments_.end(), step,
                                   [](long t, const Segment& s) { return t < s.end_step; });
  return static_cast<std::size_t>(it - segments_.begin());
}

StepParams Schedule::at(long step) const {
  const Segment& s = segments_[segment_index(step)];
  return {s.eta, s.lambda};
}

StepParams schedule_at(const Schedule& schedule, long step) { return schedule.at(step); }

namespace {

struct Coefficients {
  double keep;      // multiplies W
  double gradient;  // multiplies η·T
};

Coefficients coefficients(DecayConvention convention, double eta, double lambda) {
  switch (convention) {
    case DecayConvention::appendix: return {1.0 - eta * lambda, eta};
    case DecayConvention::main: return {1.0 - 2.0 * eta * lambda, eta};
    case DecayConvention::sample_loss: return {1.0 - eta * lambda, 2.0 * eta};
  }
  return {1.0 - eta * lambda, eta};
}

void check_finite(const NetworkParams& params, long step) {
  for (int k = 0; k < params.depth(); ++k)
    if (!params.weights[k].allFinite()) {
      std::ostringstream msg;
      msg << "layer " << (k + 1) << " has non-finite entries";
      throw DivergenceError(step, msg.str());
    }
}

}  // namespace

void sgd_update_entry(NetworkParams& params, const CompletionProblem& problem, Entry entry,
                      double eta, double lambda, DecayConvention convention, long step) {
  const int depth = params.depth();
  // T_ℓ = g·u_ℓ v_ℓᵀ with v_ℓ = W_{ℓ−1}⋯W₁ e_j and u_ℓ = (W_L⋯W_{ℓ+1})ᵀ e_i.
  std::vector<Vector> right(depth), left(depth);
  Vector x = Vector::Unit(params.arch.d_in(), entry.col);
  for (int k = 0; k < depth; ++k) {
    right[k] = x;
    x = params.weights[k] * x;
  }
  const double residual = x(entry.row) - problem.target()(entry.row, entry.col);
  Vector y = Vector::Unit(params.arch.d_out(), entry.row);
  for (int k = depth - 1; k >= 0; --k) {
    left[k] = y;
    y = params.weights[k].transpose() * y;
  }
  if (!std::isfinite(residual) || !x.allFinite() || !y.allFinite()) {
    std::ostringstream msg;
    msg << "residual " << residual << " at entry (" << entry.row << ", " << entry.col
        << "), eta " << eta << ", lambda " << lambda;
    throw DivergenceError(step, msg.str());
  }
  const Coefficients c = coefficients(convention, eta, lambda);
  const double g = c.gradient * residual;
  for (int k = 0; k < depth; ++k) {
    Matrix& w = params.weights[k];
    w *= c.keep;
    w.noalias() -= g * left[k] * right[k].transpose();
  }
}

Entry sgd_step_inplace(NetworkParams& params, const CompletionProblem& problem, double eta,
                       double lambda, Rng& rng, DecayConvention convention, long step) {
  std::uniform_int_distribution<std::size_t> pick(0, problem.observed().size() - 1);
  const Entry entry = problem.observed()[pick(rng)];
  sgd_update_entry(params, problem, entry, eta, lambda, convention, step);
  return entry;
}

SgdStepResult sgd_step(const NetworkParams& params, const CompletionProblem& problem, double eta,
                       double lambda, Rng& rng, DecayConvention convention) {
  if (!(eta > 0.0)) throw UsageError("sgd_step: eta must be positive");
  if (lambda < 0.0) throw UsageError("sgd_step: lambda must be nonnegative");
  SgdStepResult out{params, {}};
  out.sampled = sgd_step_inplace(out.params, problem, eta, lambda, rng, convention);
  check_finite(out.params, -1);
  return out;
}

NetworkParams gd_step(const NetworkParams& params, const CompletionProblem& problem, double eta,
                      double lambda) {
  if (!(eta > 0.0)) throw UsageError("gd_step: eta must be positive");
  const LayerGradients grad = full_gradient(params, problem, lambda);
  NetworkParams out = params;
  for (int k = 0; k < out.depth(); ++k) out.weights[k] -= eta * grad.layers[k];
  check_finite(out, -1);
  return out;
}

TrajectoryPoint describe_state(const NetworkParams& params, const CompletionProblem& problem,
                               long step, StepParams step_params, bool layer_diagnostics,
                               const std::optional<AbsorbingSpec>& absorbing) {
  TrajectoryPoint p;
  p.step = step;
  p.eta = step_params.eta;
  p.lambda = step_params.lambda;
  const Matrix a = forward_product(params);
  p.train_cost = cost(a, problem);
  p.param_norm_sq = param_norm_sq(params);
  p.reg_loss = p.train_cost + step_params.lambda * p.param_norm_sq;
  const Vector s = singular_values(a);
  p.singular_values.assign(s.data(), s.data() + s.size());
  p.ratio = (s.size() >= 2 && s(0) > 0.0) ? s(1) / s(0) : 0.0;
  if (layer_diagnostics && params.depth() >= 2) {
    const BalanceReport b = balance_error(params);
    p.has_layer_diagnostics = true;
    p.balance_spectral = b.max_spectral;
    p.balance_frobenius = b.max_frobenius;
  }
  if (layer_diagnostics && absorbing) {
    p.has_soft_rank = true;
    p.soft_rank_min = std::numeric_limits<double>::infinity();
    for (const Matrix& w : params.weights) {
      const double sr = soft_rank(w, absorbing->alpha);
      p.soft_rank_min = std::min(p.soft_rank_min, sr);
      p.soft_rank_max = std::max(p.soft_rank_max, sr);
    }
  }
  return p;
}

TrajectoryRecord run(const RunConfig& config) {
  if (config.record_every < 1) throw UsageError("run: record_every must be >= 1");
  NetworkParams params = config.initial ? *config.initial
                                        : init_gaussian(config.arch, config.init_scale,
                                                        config.init_seed);
  params.validate();
  if (params.arch.d_out() != config.problem.rows() || params.arch.d_in() != config.problem.cols())
    throw UsageError("run: architecture does not match the problem shape");

  const Schedule& schedule = config.schedule;
  const long total = schedule.total_steps();
  Rng rng(config.sample_seed);
  TrajectoryRecord record;
  auto wants_snapshot = [&](long t) {
    return std::find(config.snapshot_steps.begin(), config.snapshot_steps.end(), t) !=
           config.snapshot_steps.end();
  };

  const StepParams initial_params = total > 0 ? schedule.at(0) : StepParams{};
  record.points.push_back(describe_state(params, config.problem, 0, initial_params,
                                         config.layer_diagnostics, config.absorbing));
  for (long t = 0; t < total; ++t) {
    if (wants_snapshot(t)) record.snapshots.emplace(t, params);
    const StepParams sp = schedule.at(t);
    std::optional<Entry> sampled;
    try {
      if (config.mode == RunMode::sgd) {
        sampled = sgd_step_inplace(params, config.problem, sp.eta, sp.lambda, rng, config.decay, t);
      } else {
        params = gd_step(params, config.problem, sp.eta, sp.lambda);
      }
      const long done = t + 1;
      if (config.observer) config.observer(done, params);
      if (done % config.record_every == 0 || done == total) {
        check_finite(params, t);
        TrajectoryPoint p = describe_state(params, config.problem, done, sp,
                                           config.layer_diagnostics, config.absorbing);
        p.sampled = sampled;
        record.points.push_back(std::move(p));
      }
    } catch (const DivergenceError& e) {
      record.diverged = true;
      record.divergence = e.what();
      record.steps_completed = t;
      record.final_params = std::move(params);
      return record;
    }
  }
  if (wants_snapshot(total)) record.snapshots.emplace(total, params);
  record.steps_completed = total;
  record.final_params = std::move(params);
  return record;
}

std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace dln
