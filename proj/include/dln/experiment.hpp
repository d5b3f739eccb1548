#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dln/config.hpp"
#include "dln/landscape.hpp"
#include "dln/optimizer.hpp"

namespace dln {

// One point of the depth × ε × t₀ grid.
struct Variant {
  std::string name;
  int depth = 0;
  double epsilon = 0.0;
  std::optional<long> noise_steps;
};

std::vector<Variant> variants(const ExperimentConfig& config);

// First recorded step whose ratio is below `threshold` for `sustain`
// consecutive recorded points, starting there.
std::optional<long> detect_jump(const std::vector<long>& steps, const std::vector<double>& ratios,
                                double threshold, long sustain);
std::optional<long> detect_jump(const TrajectoryRecord& record, double threshold, long sustain);

// True if, after `jump_step`, the ratio exceeds 2·threshold again while the
// schedule is still in the segment that contains the jump.
bool reverse_jump(const TrajectoryRecord& record, const Schedule& schedule, long jump_step,
                  double threshold);

struct MissingEstimate {
  Entry entry;
  double value = 0.0;   // mean of A_θ over the averaging window
  double target = 0.0;  // NaN when unknown
};

struct OffshootResult {
  long branch_step = 0;
  bool diverged = false;
  std::string divergence;
  std::vector<MissingEstimate> estimates;
  double test_loss_normalized = 0.0;
  int final_rank = 0;
  MinimumClass classification = MinimumClass::exact;
  TrajectoryRecord record;
};

struct SeedResult {
  Variant variant;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t sample_seed = 0;
  Schedule schedule;
  TrajectoryRecord record;
  std::optional<long> jump_step;
  bool reverse = false;
  double final_ratio = 0.0;
  int final_rank = 0;
  MinimumClass classification = MinimumClass::exact;
  std::vector<MissingEstimate> estimates;
  double test_loss_normalized = 0.0;
  std::vector<OffshootResult> offshoots;
};

// Init stream split_seed(seed, 0), sampling stream split_seed(seed, 1),
// offshoot k sampling stream split_seed(seed, 2 + k).
SeedResult run_seed(const ExperimentConfig& config, const Variant& variant, std::uint64_t seed);

struct ExperimentResult {
  std::vector<SeedResult> runs;  // variant-major, seeds in config order
  std::string summary_json;      // empty when there are no seeds
  std::string manifest_json;
};

// Runs every variant × seed (in parallel) and, when `out_dir` is given,
// writes per-run CSVs, summary.json and manifest.json there.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = {});

// Header plus one row per recorded point; `step_offset` shifts the step column.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record, int singular_count,
                          long step_offset = 0);

struct CsvTrajectory {
  std::vector<std::string> header;
  std::vector<long> steps;
  std::vector<double> ratios;
};

CsvTrajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace dln
