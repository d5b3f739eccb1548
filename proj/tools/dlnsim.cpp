// dlnsim: command-line front end for the deep linear network toolkit.

#include <cstdint>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dln/absorbing.hpp"
#include "dln/config.hpp"
#include "dln/error.hpp"
#include "dln/experiment.hpp"
#include "dln/landscape.hpp"
#include "dln/oracle.hpp"
#include "json.hpp"

using Json = nlohmann::ordered_json;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoull(item));
  return out;
}

Json bound_json(const dln::BoundReport& b) {
  Json j;
  j["feasible"] = b.feasible;
  j["reason"] = b.reason;
  j["c1"] = b.c1;
  j["n_max"] = b.n_max;
  j["n_min"] = b.n_min;
  j["alpha_max"] = b.alpha_max;
  j["alpha_used"] = b.alpha_used;
  j["eps1_max"] = b.eps1_max;
  j["eps1_travel_max"] = b.eps1_travel_max;
  j["eta_norm"] = b.eta_norm;
  j["eta_balance"] = b.eta_balance;
  j["eta_rank"] = b.eta_rank;
  j["eta_step"] = b.eta_step;
  j["eta_max"] = b.eta_max;
  j["eta_travel_norm"] = b.eta_travel_norm;
  j["eta_travel_balance"] = b.eta_travel_balance;
  j["eta_travel_max"] = b.eta_travel_max;
  j["cap_min_closure"] = b.cap_min_closure;
  j["cap_min_travel"] = b.cap_min_travel;
  j["cap_min"] = b.cap_min;
  j["eta_used"] = b.eta_used;
  j["c0"] = b.c0;
  j["t0_min"] = b.t0_min;
  j["t1_min"] = b.t1_min;
  j["jump_prob_lower_bound"] = b.jump_prob_lower_bound;
  j["log10_jump_prob"] = b.log10_jump_prob;
  return j;
}

int cmd_run(const std::string& config_path, const std::string& seeds, const std::string& out) {
  dln::ExperimentConfig config = dln::load_config(config_path);
  if (!seeds.empty()) config.seeds = parse_seed_list(seeds);
  std::string dir = out;
  if (dir.empty()) {
    if (!config.output) throw dln::UsageError("no output directory: pass --out or set `output`");
    dir = *config.output;
  }
  const dln::ExperimentResult r = dln::run_experiment(config, dir);
  std::cout << "wrote " << r.runs.size() << " runs to " << dir << "\n";
  return 0;
}

int cmd_preset(const std::string& name, const std::string& out, int seeds, bool print) {
  dln::ExperimentConfig config = dln::preset(name);
  if (seeds >= 0) {
    config.seeds.clear();
    for (int s = 0; s < seeds; ++s) config.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (print) {
    std::cout << dln::to_yaml(config);
    return 0;
  }
  if (out.empty()) throw dln::UsageError("preset: --out is required");
  const dln::ExperimentResult r = dln::run_experiment(config, out);
  std::cout << "wrote " << r.runs.size() << " runs to " << out << "\n";
  return 0;
}

struct BoundArgs {
  double lambda = 0.1;
  int depth = 3;
  double cap = 10.0;
  double epsilon = 0.25;
  int width = 2;
  int r = 1;
  double eps1 = 1e-12;
  double eps2 = 0.25;
  double alpha = 0.0;
  double eta = 0.0;
  double c0 = 0.0;
};

int cmd_bounds(const BoundArgs& a) {
  const dln::CompletionProblem problem = dln::CompletionProblem::two_by_two(a.epsilon);
  const dln::ArchSpec arch = dln::ArchSpec::uniform(a.depth, 2, a.width, 2);
  dln::BoundOptions opt;
  if (a.alpha > 0.0) opt.alpha = a.alpha;
  if (a.eta > 0.0) opt.eta = a.eta;
  if (a.c0 > 0.0) opt.c0 = a.c0;
  const dln::BoundReport b =
      dln::admissible_bounds(a.lambda, a.depth, arch, problem, a.r, a.eps1, a.eps2, a.cap, opt);
  std::cout << bound_json(b).dump(2) << "\n";
  return 0;
}

int cmd_landscape(const std::string& config_path) {
  const dln::ExperimentConfig config = dln::load_config(config_path);
  const dln::CompletionProblem problem = config.problem.build();
  const dln::ArchSpec arch = config.arch.build(problem.cols(), problem.rows());
  const std::uint64_t seed = config.seeds.empty() ? 0 : config.seeds.front();
  const dln::LandscapeSpec& l = config.landscape;
  const dln::NetworkParams start =
      dln::init_gaussian(arch, config.init_scale, dln::split_seed(seed, 0));
  const dln::ConvergeResult c =
      dln::converge(start, problem, l.lambda, l.eta, l.grad_tol, l.max_steps);
  Json j;
  j["converged"] = c.converged;
  j["steps"] = c.steps;
  j["grad_norm"] = c.grad_norm;
  j["loss"] = c.loss;
  dln::ClassifyOptions opt;
  opt.rank_tol = l.rank_tol;
  opt.stationarity_tol = std::max(l.grad_tol, 1e-6);
  opt.hessian = l.hessian;
  opt.hessian_probes = l.hessian_probes;
  opt.hessian_iters = l.hessian_iters;
  if (c.grad_norm <= opt.stationarity_tol) {
    const dln::MinimumReport m =
        dln::classify_minimum(c.params, problem, l.lambda, problem.count() > 0 ? config.problem.minimal_rank() : 0, opt);
    Json mj;
    mj["grad_norm"] = m.grad_norm;
    mj["balance_error"] = m.balance_error;
    mj["rank"] = m.rank;
    mj["r_star"] = m.r_star;
    mj["classification"] = dln::to_string(m.classification);
    mj["cost"] = m.cost;
    mj["singular_values"] = m.singular_values;
    if (m.hessian) {
      mj["hessian_min_eig"] = m.hessian->value;
      mj["hessian_residual"] = m.hessian->residual;
      mj["hessian_confident"] = m.hessian->confident;
    }
    const dln::Matrix a = dln::forward_product(c.params);
    Json missing = Json::array();
    for (const dln::Entry& e : problem.missing())
      missing.push_back({{"row", e.row}, {"col", e.col}, {"value", a(e.row, e.col)}});
    mj["missing_entries"] = std::move(missing);
    j["minimum"] = std::move(mj);
  }
  std::cout << j.dump(2) << "\n";
  return c.converged ? 0 : 2;
}

// Oracle suites on small instances; exit status 1 if any check fails.
int cmd_verify(int trials, std::uint64_t seed) {
  Json j;
  bool ok = true;
  dln::Rng rng(seed);

  double worst_grad = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::uniform_int_distribution<int> depth_d(2, 4), dim_d(1, 4);
    const int depth = depth_d(rng);
    std::vector<int> widths(depth + 1);
    for (int& w : widths) w = dim_d(rng);
    const int m = std::min(widths.front(), widths.back());
    for (int k = 1; k < depth; ++k) widths[k] = std::max(widths[k], m);
    dln::ArchSpec arch{depth, widths};
    const dln::NetworkParams p = dln::init_gaussian(arch, 1.0, rng());
    dln::Matrix target = dln::Matrix::Random(widths.back(), widths.front());
    std::vector<dln::Entry> obs;
    for (int i = 0; i < target.rows(); ++i)
      for (int c = 0; c < target.cols(); ++c)
        if ((i + c) % 2 == 0 || obs.empty()) obs.push_back({i, c});
    const dln::CompletionProblem prob(target, obs);
    const double lambda = t % 2 ? 0.1 : 0.0;
    const dln::LayerGradients g = dln::full_gradient(p, prob, lambda);
    const dln::LayerGradients f = dln::fd_gradient(p, prob, lambda, 1e-5);
    double diff = 0.0;
    for (int k = 0; k < depth; ++k) diff += (g.layers[k] - f.layers[k]).squaredNorm();
    worst_grad = std::max(worst_grad, std::sqrt(diff) / std::max(g.norm(), 1e-12));
  }
  j["gradient_check"] = {{"trials", trials}, {"max_rel_error", worst_grad}};
  ok = ok && worst_grad <= 1e-6;

  double worst_eig = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::uniform_int_distribution<int> n_d(1, 16);
    const int n = n_d(rng);
    dln::Matrix s(n, n);
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < n; ++c) s(i, c) = normal(rng);
    s = 0.5 * (s + s.transpose()).eval();
    const dln::JacobiResult jr = dln::jacobi_eigs(s);
    worst_eig = std::max(worst_eig, (jr.values - dln::symmetric_eigenvalues(s)).cwiseAbs().maxCoeff());
  }
  j["jacobi_vs_main"] = {{"trials", trials}, {"max_abs_diff", worst_eig}};
  ok = ok && worst_eig <= 1e-10;

  const dln::CompletionProblem prob = dln::CompletionProblem::two_by_two(0.25);
  const dln::ArchSpec small = dln::ArchSpec::uniform(3, 2, 2, 2);
  const dln::BoundReport b = dln::admissible_bounds(1.0, 3, small, prob, 1, 1e-300, 0.49, 1.0);
  dln::AbsorbingSpec spec{1, b.eps1_max, 0.49, b.alpha_max, 1.0, small.max_dim()};
  const dln::ClosureReport cr =
      dln::closure_monte_carlo(spec, 1.0, small, prob, trials, 200, seed);
  j["closure"] = {{"trials", cr.trials},
                  {"step_checks", cr.step_checks},
                  {"eta", cr.eta},
                  {"violations", cr.violations.size()}};
  ok = ok && cr.violations.empty();

  long prop20_violations = 0;
  for (int t = 0; t < trials; ++t) {
    const dln::NetworkParams p = dln::sample_member(spec, small, rng);
    if (dln::output_soft_rank(p, spec.alpha) > dln::output_soft_rank_ceiling(spec, 3))
      ++prop20_violations;
  }
  j["output_soft_rank"] = {{"trials", trials}, {"violations", prop20_violations}};
  ok = ok && prop20_violations == 0;

  j["ok"] = ok;
  std::cout << j.dump(2) << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep linear network matrix-completion simulator"};
  app.require_subcommand(1);

  std::string config_path, seeds, out;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("--config", config_path, "YAML config")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "comma-separated seeds (overrides the config)");
  run->add_option("--out", out, "output directory");

  std::string preset_name;
  int preset_seeds = -1;
  bool print = false;
  auto* pre = app.add_subcommand("preset", "run one of the built-in experiments");
  pre->add_option("name", preset_name, "fig1 | fig2 | fig3 | fig4")
      ->required()
      ->check(CLI::IsMember(dln::preset_names()));
  pre->add_option("--out", out, "output directory");
  pre->add_option("--seeds", preset_seeds, "run seeds 0..N-1");
  pre->add_flag("--print-config", print, "print the preset as YAML and exit");

  BoundArgs ba;
  auto* bounds = app.add_subcommand("bounds", "print the closure/reachability constants as JSON");
  bounds->add_option("--lambda", ba.lambda)->required();
  bounds->add_option("--depth", ba.depth)->required();
  bounds->add_option("--cap", ba.cap)->required();
  bounds->add_option("--epsilon", ba.epsilon, "2x2 problem parameter");
  bounds->add_option("--width", ba.width, "hidden width");
  bounds->add_option("--r", ba.r);
  bounds->add_option("--eps1", ba.eps1);
  bounds->add_option("--eps2", ba.eps2);
  bounds->add_option("--alpha", ba.alpha, "soft-rank knee (default: its ceiling)");
  bounds->add_option("--eta", ba.eta, "learning rate for T0/T1 (default: the ceiling)");
  bounds->add_option("--c0", ba.c0, "initial max layer norm (default: cap)");

  auto* land = app.add_subcommand("landscape", "converge GD and classify the minimum");
  land->add_option("--config", config_path, "YAML config")->required()->check(CLI::ExistingFile);

  int trials = 20;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "run the oracle suites");
  verify->add_option("--trials", trials);
  verify->add_option("--seed", verify_seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, seeds, out);
    if (*pre) return cmd_preset(preset_name, out, preset_seeds, print);
    if (*bounds) return cmd_bounds(ba);
    if (*land) return cmd_landscape(config_path);
    if (*verify) return cmd_verify(trials, verify_seed);
  } catch (const dln::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
