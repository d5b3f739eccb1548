#include "dln/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dln/error.hpp"
#include "json.hpp"

namespace dln {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::vector<Variant> variants(const ExperimentConfig& config) {
  std::vector<int> depths = config.sweep.depths;
  if (depths.empty())
    depths.push_back(config.arch.widths.empty() ? config.arch.depth
                                                : static_cast<int>(config.arch.widths.size()) - 1);
  std::vector<double> epsilons = config.sweep.epsilons;
  if (epsilons.empty()) epsilons.push_back(config.problem.epsilon);
  std::vector<std::optional<long>> t0s;
  if (config.schedule.kind == "anneal")
    for (long t : config.schedule.noise_steps) t0s.push_back(t);
  else
    t0s.push_back(std::nullopt);

  const bool two_by_two = config.problem.kind == "two_by_two";
  std::vector<Variant> out;
  for (int d : depths)
    for (double e : epsilons)
      for (const auto& t0 : t0s) {
        Variant v;
        v.depth = d;
        v.epsilon = two_by_two ? e : std::numeric_limits<double>::quiet_NaN();
        v.noise_steps = t0;
        v.name = "L" + std::to_string(d);
        if (two_by_two) v.name += "_eps" + short_number(e);
        if (t0) v.name += "_t0_" + std::to_string(*t0);
        out.push_back(std::move(v));
      }
  return out;
}

std::optional<long> detect_jump(const std::vector<long>& steps, const std::vector<double>& ratios,
                                double threshold, long sustain) {
  if (steps.size() != ratios.size()) throw UsageError("detect_jump: length mismatch");
  if (sustain < 1) throw UsageError("detect_jump: sustain must be >= 1");
  long run = 0;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    run = ratios[k] < threshold ? run + 1 : 0;
    if (run == sustain) return steps[k + 1 - static_cast<std::size_t>(sustain)];
  }
  return std::nullopt;
}

std::optional<long> detect_jump(const TrajectoryRecord& record, double threshold, long sustain) {
  std::vector<long> steps;
  std::vector<double> ratios;
  for (const TrajectoryPoint& p : record.points) {
    steps.push_back(p.step);
    ratios.push_back(p.ratio);
  }
  return detect_jump(steps, ratios, threshold, sustain);
}

bool reverse_jump(const TrajectoryRecord& record, const Schedule& schedule, long jump_step,
                  double threshold) {
  if (schedule.total_steps() == 0) return false;
  // A recorded state after t steps was produced by step t−1.
  auto segment_of = [&](long t) { return schedule.segment_index(std::max(0L, t - 1)); };
  const std::size_t segment = segment_of(jump_step);
  for (const TrajectoryPoint& p : record.points) {
    if (p.step <= jump_step) continue;
    if (segment_of(p.step) != segment) break;
    if (p.ratio > 2.0 * threshold) return true;
  }
  return false;
}

namespace {

struct Averager {
  std::vector<Entry> entries;
  long from = 0;  // average over states after steps from+1 … total
  std::vector<double> sums;
  long count = 0;

  void add(const NetworkParams& params) {
    const Matrix a = forward_product(params);
    for (std::size_t k = 0; k < entries.size(); ++k) sums[k] += a(entries[k].row, entries[k].col);
    ++count;
  }
};

std::vector<MissingEstimate> finish_estimates(const Averager& avg, const CompletionProblem& problem,
                                              const TrajectoryRecord& record) {
  std::vector<MissingEstimate> out;
  const Matrix a = forward_product(record.final_params);
  for (std::size_t k = 0; k < avg.entries.size(); ++k) {
    MissingEstimate e;
    e.entry = avg.entries[k];
    e.value = record.diverged || avg.count == 0 ? a(e.entry.row, e.entry.col)
                                                : avg.sums[k] / avg.count;
    if (record.diverged) e.value = std::numeric_limits<double>::quiet_NaN();
    e.target = problem.target()(e.entry.row, e.entry.col);
    out.push_back(e);
  }
  return out;
}

double normalized_test_loss(const std::vector<MissingEstimate>& estimates) {
  double num = 0.0, den = 0.0;
  for (const MissingEstimate& e : estimates) {
    if (!std::isfinite(e.target)) continue;
    num += (e.value - e.target) * (e.value - e.target);
    den += e.target * e.target;
  }
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

TrajectoryRecord run_with_average(RunConfig rc, const CompletionProblem& problem, long window,
                                  std::vector<MissingEstimate>& estimates) {
  Averager avg;
  avg.entries = problem.missing();
  avg.sums.assign(avg.entries.size(), 0.0);
  const long total = rc.schedule.total_steps();
  avg.from = std::max(0L, total - window);
  if (!avg.entries.empty())
    rc.observer = [&avg](long done, const NetworkParams& params) {
      if (done > avg.from) avg.add(params);
    };
  TrajectoryRecord record = run(rc);
  estimates = finish_estimates(avg, problem, record);
  return record;
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& config, const Variant& variant, std::uint64_t seed) {
  SeedResult out;
  out.variant = variant;
  out.seed = seed;
  out.init_seed = split_seed(seed, 0);
  out.sample_seed = split_seed(seed, 1);

  const bool two_by_two = config.problem.kind == "two_by_two";
  const CompletionProblem problem =
      two_by_two ? config.problem.build(variant.epsilon) : config.problem.build();
  const std::optional<int> depth_override =
      config.sweep.depths.empty() ? std::nullopt : std::optional<int>(variant.depth);
  const ArchSpec arch = config.arch.build(problem.cols(), problem.rows(), depth_override);
  out.schedule = config.schedule.build(variant.noise_steps);

  RunConfig rc{.problem = problem, .arch = arch};
  rc.init_scale = config.init_scale;
  rc.init_seed = out.init_seed;
  rc.schedule = out.schedule;
  rc.record_every = config.record_every;
  rc.mode = config.mode;
  rc.decay = config.decay;
  if (config.absorbing) {
    AbsorbingSpec spec = *config.absorbing;
    spec.n = arch.max_dim();
    rc.absorbing = spec;
  }
  rc.sample_seed = out.sample_seed;
  rc.layer_diagnostics = config.layer_diagnostics;
  if (config.offshoots) rc.snapshot_steps = config.offshoots->times;

  out.record = run_with_average(rc, problem, config.average_window, out.estimates);
  out.test_loss_normalized = normalized_test_loss(out.estimates);
  out.jump_step = detect_jump(out.record, config.jump.threshold, config.jump.sustain);
  if (out.jump_step)
    out.reverse = reverse_jump(out.record, out.schedule, *out.jump_step, config.jump.threshold);
  const Matrix a = forward_product(out.record.final_params);
  const Vector s = singular_values(a);
  out.final_ratio = s.size() >= 2 && s(0) > 0.0 ? s(1) / s(0) : 0.0;
  const int r_star = config.problem.minimal_rank();
  out.final_rank = a.allFinite() ? numeric_rank(a, config.rank_tol) : -1;
  out.classification = classify_rank(out.final_rank, r_star);

  if (config.offshoots) {
    const OffshootSpec& o = *config.offshoots;
    for (std::size_t k = 0; k < o.times.size(); ++k) {
      const auto snap = out.record.snapshots.find(o.times[k]);
      if (snap == out.record.snapshots.end()) continue;  // main run diverged earlier
      OffshootResult off;
      off.branch_step = o.times[k];
      RunConfig branch = rc;
      branch.initial = snap->second;
      branch.schedule = Schedule::constant(o.steps, o.eta, o.lambda);
      branch.snapshot_steps.clear();
      branch.layer_diagnostics = false;
      branch.absorbing.reset();
      branch.sample_seed = split_seed(seed, 2 + k);
      off.record = run_with_average(branch, problem, config.average_window, off.estimates);
      off.diverged = off.record.diverged;
      off.divergence = off.record.divergence;
      off.test_loss_normalized = normalized_test_loss(off.estimates);
      const Matrix b = forward_product(off.record.final_params);
      off.final_rank = b.allFinite() ? numeric_rank(b, config.rank_tol) : -1;
      off.classification = classify_rank(off.final_rank, r_star);
      out.offshoots.push_back(std::move(off));
    }
  }
  out.record.snapshots.clear();
  return out;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record, int singular_count,
                          long step_offset) {
  out << "step,eta,lambda,train_cost,reg_loss,param_norm_sq";
  for (int k = 1; k <= singular_count; ++k) out << ",s" << k;
  out << ",ratio_s2_s1,balance_err_max_spec,balance_err_max_fro,softrank_min,softrank_max,"
         "sampled_i,sampled_j\n";
  for (const TrajectoryPoint& p : record.points) {
    out << (p.step + step_offset) << ',' << fmt(p.eta) << ',' << fmt(p.lambda) << ','
        << fmt(p.train_cost) << ',' << fmt(p.reg_loss) << ',' << fmt(p.param_norm_sq);
    for (int k = 0; k < singular_count; ++k)
      out << ',' << (k < static_cast<int>(p.singular_values.size()) ? fmt(p.singular_values[k]) : "");
    out << ',' << fmt(p.ratio) << ',';
    if (p.has_layer_diagnostics) out << fmt(p.balance_spectral) << ',' << fmt(p.balance_frobenius);
    else out << ',';
    out << ',';
    if (p.has_soft_rank) out << fmt(p.soft_rank_min) << ',' << fmt(p.soft_rank_max);
    else out << ',';
    out << ',';
    if (p.sampled) out << p.sampled->row << ',' << p.sampled->col;
    else out << ',';
    out << '\n';
  }
}

CsvTrajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  CsvTrajectory out;
  std::string line;
  if (!std::getline(in, line)) throw UsageError("empty trajectory file " + path.string());
  out.header = split(line);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(out.header.begin(), out.header.end(), name);
    if (it == out.header.end()) throw UsageError("missing column " + name);
    return static_cast<std::size_t>(it - out.header.begin());
  };
  const std::size_t step_col = col("step"), ratio_col = col("ratio_s2_s1");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    out.steps.push_back(std::stol(cells.at(step_col)));
    out.ratios.push_back(std::strtod(cells.at(ratio_col).c_str(), nullptr));
  }
  return out;
}

namespace {

Json estimates_json(const std::vector<MissingEstimate>& estimates) {
  Json list = Json::array();
  for (const MissingEstimate& e : estimates)
    list.push_back({{"row", e.entry.row},
                    {"col", e.entry.col},
                    {"value", number_or_null(e.value)},
                    {"target", number_or_null(e.target)}});
  return list;
}

std::string run_dir(const SeedResult& r) { return r.variant.name; }

std::string trajectory_name(const SeedResult& r) {
  return run_dir(r) + "/seed_" + std::to_string(r.seed) + ".csv";
}

std::string offshoot_name(const SeedResult& r, const OffshootResult& o) {
  return run_dir(r) + "/seed_" + std::to_string(r.seed) + "_offshoot_" +
         std::to_string(o.branch_step) + ".csv";
}

Json summary_entry(const SeedResult& r) {
  Json j;
  j["variant"] = r.variant.name;
  j["depth"] = r.variant.depth;
  j["epsilon"] = number_or_null(r.variant.epsilon);
  j["noise_steps"] = r.variant.noise_steps ? Json(*r.variant.noise_steps) : Json(nullptr);
  j["seed"] = r.seed;
  j["init_seed"] = r.init_seed;
  j["sample_seed"] = r.sample_seed;
  j["trajectory_csv"] = trajectory_name(r);
  j["diverged"] = r.record.diverged;
  j["divergence"] = r.record.divergence;
  j["steps_completed"] = r.record.steps_completed;
  j["jump_detected"] = r.jump_step.has_value();
  j["jump_step"] = r.jump_step ? Json(*r.jump_step) : Json(nullptr);
  j["reverse_jump"] = r.reverse;
  j["final_ratio"] = number_or_null(r.final_ratio);
  j["final_rank"] = r.final_rank;
  j["classification"] = to_string(r.classification);
  const TrajectoryPoint& last = r.record.points.back();
  j["final_train_cost"] = number_or_null(last.train_cost);
  j["missing_estimates"] = estimates_json(r.estimates);
  j["test_loss_normalized"] = number_or_null(r.test_loss_normalized);
  Json offs = Json::array();
  for (const OffshootResult& o : r.offshoots) {
    Json oj;
    oj["branch_step"] = o.branch_step;
    oj["after_jump"] = r.jump_step && o.branch_step >= *r.jump_step;
    oj["csv"] = offshoot_name(r, o);
    oj["diverged"] = o.diverged;
    oj["missing_estimates"] = estimates_json(o.estimates);
    oj["test_loss_normalized"] = number_or_null(o.test_loss_normalized);
    oj["final_rank"] = o.final_rank;
    oj["classification"] = to_string(o.classification);
    offs.push_back(std::move(oj));
  }
  j["offshoots"] = std::move(offs);
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  const std::vector<Variant> grid = variants(config);
  struct Job {
    std::size_t variant;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < grid.size(); ++v)
    for (std::size_t s = 0; s < config.seeds.size(); ++s) jobs.push_back({v, s});

  ExperimentResult result;
  result.runs.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        SeedResult r = run_seed(config, grid[jobs[k].variant], config.seeds[jobs[k].seed]);
        if (out_dir) {
          const CompletionProblem p = config.problem.build(
              config.problem.kind == "two_by_two" ? std::optional<double>(r.variant.epsilon)
                                                  : std::nullopt);
          const int count = std::min(p.rows(), p.cols());
          std::ostringstream main;
          write_trajectory_csv(main, r.record, count);
          write_file(*out_dir / trajectory_name(r), main.str());
          for (const OffshootResult& o : r.offshoots) {
            std::ostringstream branch;
            write_trajectory_csv(branch, o.record, count, o.branch_step);
            write_file(*out_dir / offshoot_name(r, o), branch.str());
          }
        }
        result.runs[k] = std::move(r);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(
      1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers && !jobs.empty(); ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::string> files;
  if (!jobs.empty()) {
    Json runs = Json::array();
    for (const SeedResult& r : result.runs) {
      runs.push_back(summary_entry(r));
      files.push_back(trajectory_name(r));
      for (const OffshootResult& o : r.offshoots) files.push_back(offshoot_name(r, o));
    }
    Json summary;
    summary["name"] = config.name;
    summary["jump_threshold"] = config.jump.threshold;
    summary["jump_sustain"] = config.jump.sustain;
    summary["runs"] = std::move(runs);
    result.summary_json = summary.dump(2) + "\n";
    files.push_back("summary.json");
  }
  Json manifest;
  manifest["name"] = config.name;
  manifest["seeds"] = config.seeds;
  manifest["seed_rule"] =
      "init stream split_seed(seed, 0), sampling stream split_seed(seed, 1), offshoot k "
      "split_seed(seed, 2 + k); split_seed is splitmix64 of seed + (index + 1) * "
      "0x9E3779B97F4A7C15";
  Json names = Json::array();
  for (const Variant& v : grid) names.push_back(v.name);
  manifest["variants"] = std::move(names);
  manifest["files"] = files;
  manifest["config"] = to_yaml(config);
  result.manifest_json = manifest.dump(2) + "\n";

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    if (!result.summary_json.empty()) write_file(*out_dir / "summary.json", result.summary_json);
    write_file(*out_dir / "manifest.json", result.manifest_json);
  }
  return result;
}

}  // namespace dln
