#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dln/absorbing.hpp"
#include "dln/objective.hpp"
#include "dln/optimizer.hpp"

namespace dln {

struct ProblemSpec {
  std::string kind = "two_by_two";  // two_by_two | explicit
  double epsilon = 0.25;
  Matrix target;  // explicit: full matrix, NaN where the truth is unknown
  std::vector<Entry> observed;
  std::optional<int> r_star;  // defaults to 1 for two_by_two

  CompletionProblem build(std::optional<double> epsilon_override = {}) const;
  int minimal_rank() const;
};

struct ArchConfig {
  int depth = 3;
  int width = 100;          // hidden width when `widths` is empty
  std::vector<int> widths;  // full list w₀..w_L; overrides depth/width

  ArchSpec build(int d_in, int d_out, std::optional<int> depth_override = {}) const;
};

struct PhaseSpec {
  long steps = 0;
  double eta = 0.0;
  double lambda = 0.0;
};

// Exactly one of the three forms is active.
struct ScheduleSpec {
  std::string kind = "segments";  // segments | periodic | anneal
  std::vector<Segment> segments;
  // periodic: cycles through `phases` until `total` steps
  std::vector<PhaseSpec> phases;
  long total = 0;
  // anneal: warm-up, then high noise until t₀, then `low`
  PhaseSpec warmup;
  PhaseSpec high;  // steps unused; runs until t₀
  PhaseSpec low;
  std::vector<long> noise_steps;  // t₀ grid

  // Concrete schedule; `noise_steps` picks t₀ for the anneal form.
  Schedule build(std::optional<long> noise_steps = {}) const;
};

struct OffshootSpec {
  std::vector<long> times;
  double eta = 0.02;
  double lambda = 0.001;
  long steps = 20000;
};

struct JumpSpec {
  double threshold = 0.05;
  long sustain = 100;
};

struct SweepSpec {
  std::vector<int> depths;
  std::vector<double> epsilons;
};

struct LandscapeSpec {
  double lambda = 0.01;
  double eta = 0.05;
  double grad_tol = 1e-10;
  long max_steps = 500000;
  double rank_tol = 1e-6;
  bool hessian = true;
  int hessian_probes = 3;
  int hessian_iters = 500;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSpec problem;
  ArchConfig arch;
  double init_scale = 0.5;
  ScheduleSpec schedule;
  RunMode mode = RunMode::sgd;
  DecayConvention decay = DecayConvention::appendix;
  long record_every = 1;
  bool layer_diagnostics = true;
  std::optional<AbsorbingSpec> absorbing;  // n is filled from the architecture
  std::optional<OffshootSpec> offshoots;
  JumpSpec jump;
  SweepSpec sweep;
  long average_window = 1;  // steps averaged for missing-entry estimates
  double rank_tol = 0.05;   // relative tolerance for the final numeric rank
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> output;
  LandscapeSpec landscape;

  void validate() const;
};

// Parses YAML text. Unknown keys and invalid values raise ConfigError with
// the key path and line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// YAML text that parse_config maps back to an equal configuration.
std::string to_yaml(const ExperimentConfig& config);

ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace dln
