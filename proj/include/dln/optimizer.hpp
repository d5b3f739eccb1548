#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dln/absorbing.hpp"
#include "dln/linnet.hpp"
#include "dln/objective.hpp"

namespace dln {

using Rng = std::mt19937_64;

// How weight decay and the per-entry gradient T_ℓ enter one SGD step.
//   appendix:    W ← W − η(T + λW)
//   main:        W ← (1 − 2ηλ)W − ηT
//   sample_loss: W ← W − η(2T + λW)   (per-sample loss (A_ij − A*_ij)² plus weight decay λ)
enum class DecayConvention { appendix, main, sample_loss };

std::string to_string(DecayConvention convention);
DecayConvention parse_decay_convention(std::string_view text);

struct StepParams {
  double eta = 0.0;
  double lambda = 0.0;
};

// (η, λ) on the half-open step range [previous end_step, end_step).
struct Segment {
  long end_step = 0;
  double eta = 0.0;
  double lambda = 0.0;
};

class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(std::vector<Segment> segments);

  static Schedule constant(long total_steps, double eta, double lambda);

  const std::vector<Segment>& segments() const { return segments_; }
  long total_steps() const { return segments_.empty() ? 0 : segments_.back().end_step; }
  StepParams at(long step) const;
  std::size_t segment_index(long step) const;

 private:
  std::vector<Segment> segments_;
};

StepParams schedule_at(const Schedule& schedule, long step);

struct SgdStepResult {
  NetworkParams params;
  Entry sampled;
};

// One SGD step: draw (i,j) uniformly from I, then update every layer from
// the pre-step weights.
SgdStepResult sgd_step(const NetworkParams& params, const CompletionProblem& problem, double eta,
                       double lambda, Rng& rng,
                       DecayConvention convention = DecayConvention::appendix);

// In-place step used by the runners; returns the sampled entry.
Entry sgd_step_inplace(NetworkParams& params, const CompletionProblem& problem, double eta,
                       double lambda, Rng& rng, DecayConvention convention, long step = -1);

// Same update for a caller-chosen observed entry.
void sgd_update_entry(NetworkParams& params, const CompletionProblem& problem, Entry entry,
                      double eta, double lambda, DecayConvention convention, long step = -1);

// W_ℓ ← W_ℓ − η ∇_ℓ L_λ.
NetworkParams gd_step(const NetworkParams& params, const CompletionProblem& problem, double eta,
                      double lambda);

enum class RunMode { gd, sgd };

struct TrajectoryPoint {
  long step = 0;
  double eta = 0.0;
  double lambda = 0.0;
  double train_cost = 0.0;
  double reg_loss = 0.0;
  double param_norm_sq = 0.0;
  std::vector<double> singular_values;  // of A_θ, descending
  double ratio = 0.0;                   // s₂/s₁, 0 when s₁ = 0
  bool has_layer_diagnostics = false;
  double balance_spectral = 0.0;
  double balance_frobenius = 0.0;
  bool has_soft_rank = false;
  double soft_rank_min = 0.0;
  double soft_rank_max = 0.0;
  std::optional<Entry> sampled;  // entry used by the step that produced this state
};

struct TrajectoryRecord {
  std::vector<TrajectoryPoint> points;
  bool diverged = false;
  std::string divergence;
  long steps_completed = 0;
  NetworkParams final_params;
  std::map<long, NetworkParams> snapshots;  // state after `key` steps
};

struct RunConfig {
  CompletionProblem problem;
  ArchSpec arch{};
  double init_scale = 1.0;
  std::uint64_t init_seed = 0;
  std::optional<NetworkParams> initial{};  // overrides the Gaussian init
  Schedule schedule{};
  long record_every = 1;
  RunMode mode = RunMode::sgd;
  DecayConvention decay = DecayConvention::appendix;
  std::optional<AbsorbingSpec> absorbing{};  // enables soft-rank columns
  std::uint64_t sample_seed = 0;
  bool layer_diagnostics = true;  // balance error and soft ranks per record
  std::vector<long> snapshot_steps{};
  // Called after every completed step with the number of steps done.
  std::function<void(long, const NetworkParams&)> observer{};
};

// Runs schedule.total_steps() steps, recording every `record_every` steps and
// the final one. Divergence ends the run early with `diverged` set.
TrajectoryRecord run(const RunConfig& config);

// Diagnostics of a single state (used by run and by the experiment layer).
TrajectoryPoint describe_state(const NetworkParams& params, const CompletionProblem& problem,
                               long step, StepParams step_params, bool layer_diagnostics,
                               const std::optional<AbsorbingSpec>& absorbing);

// Independent stream seed for run `index` under `base`: splitmix64(base + (index+1)·φ).
std::uint64_t split_seed(std::uint64_t base, std::uint64_t index);

}  // namespace dln
