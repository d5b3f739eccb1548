#include "dln/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dln/error.hpp"

namespace dln {

CompletionProblem ProblemSpec::build(std::optional<double> epsilon_override) const {
  if (kind == "two_by_two") return CompletionProblem::two_by_two(epsilon_override.value_or(epsilon));
  if (epsilon_override) throw UsageError("epsilon sweeps need a two_by_two problem");
  return CompletionProblem(target, observed);
}

int ProblemSpec::minimal_rank() const { return r_star.value_or(1); }

ArchSpec ArchConfig::build(int d_in, int d_out, std::optional<int> depth_override) const {
  ArchSpec arch;
  if (!widths.empty() && !depth_override) {
    arch.depth = static_cast<int>(widths.size()) - 1;
    arch.widths = widths;
  } else {
    arch = ArchSpec::uniform(depth_override.value_or(depth), d_in, width, d_out);
  }
  if (arch.d_in() != d_in || arch.d_out() != d_out)
    throw UsageError("architecture widths do not match the problem shape");
  arch.validate();
  return arch;
}

Schedule ScheduleSpec::build(std::optional<long> t0) const {
  std::vector<Segment> out;
  auto push = [&](long steps, double eta, double lambda) {
    if (steps <= 0) return;
    const long start = out.empty() ? 0 : out.back().end_step;
    out.push_back({start + steps, eta, lambda});
  };
  if (kind == "segments") {
    out = segments;
  } else if (kind == "periodic") {
    long done = 0;
    for (std::size_t k = 0; done < total; k = (k + 1) % phases.size()) {
      const long steps = std::min(phases[k].steps, total - done);
      push(steps, phases[k].eta, phases[k].lambda);
      done += steps;
    }
  } else {
    const long noise = t0.value_or(noise_steps.empty() ? 0 : noise_steps.front());
    const long warm = std::min(warmup.steps, noise);
    push(warm, warmup.eta, warmup.lambda);
    push(noise - warm, high.eta, high.lambda);
    push(low.steps, low.eta, low.lambda);
  }
  return Schedule(std::move(out));
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError(key, 0, what);
  };
  if (problem.kind != "two_by_two" && problem.kind != "explicit")
    fail("problem.kind", "expected two_by_two or explicit");
  if (problem.kind == "two_by_two" && !(problem.epsilon > 0.0))
    fail("problem.epsilon", "must be positive");
  if (!(init_scale > 0.0)) fail("init.scale", "must be positive");
  if (record_every < 1) fail("record_every", "must be >= 1");
  if (average_window < 1) fail("average_window", "must be >= 1");
  if (!(jump.threshold > 0.0 && jump.threshold < 1.0)) fail("jump.threshold", "must lie in (0, 1)");
  if (jump.sustain < 1) fail("jump.sustain", "must be >= 1");
  if (!(rank_tol > 0.0)) fail("rank_tol", "must be positive");
  if (!sweep.epsilons.empty() && problem.kind != "two_by_two")
    fail("sweep.epsilons", "needs a two_by_two problem");
  for (double e : sweep.epsilons)
    if (!(e > 0.0)) fail("sweep.epsilons", "must be positive");
  for (int d : sweep.depths)
    if (d < 1) fail("sweep.depths", "must be >= 1");
  if (schedule.kind == "periodic") {
    if (schedule.phases.empty()) fail("schedule.periodic.phases", "must not be empty");
    for (const PhaseSpec& p : schedule.phases)
      if (p.steps < 1) fail("schedule.periodic.phases", "steps must be >= 1");
    if (schedule.total < 0) fail("schedule.periodic.total", "must be >= 0");
  }
  if (schedule.kind == "anneal")
    for (long t : schedule.noise_steps)
      if (t < 0) fail("schedule.anneal.noise_steps", "must be >= 0");
  if (absorbing) {
    try {
      AbsorbingSpec probe = *absorbing;
      probe.n = std::max(probe.n, 1);
      probe.validate();
    } catch (const UsageError& e) {
      fail("absorbing", e.what());
    }
  }

  // Each concrete schedule must be valid and long enough for every branch.
  std::vector<std::optional<long>> t0s;
  if (schedule.kind == "anneal" && !schedule.noise_steps.empty())
    for (long t : schedule.noise_steps) t0s.push_back(t);
  else
    t0s.push_back(std::nullopt);
  for (const auto& t0 : t0s) {
    Schedule s;
    try {
      s = schedule.build(t0);
    } catch (const UsageError& e) {
      fail("schedule", e.what());
    }
    if (offshoots)
      for (long t : offshoots->times)
        if (t < 0 || t > s.total_steps())
          fail("offshoots.times", "branch time " + std::to_string(t) +
                                      " outside the run horizon " +
                                      std::to_string(s.total_steps()));
  }
  if (offshoots) {
    if (!(offshoots->eta > 0.0)) fail("offshoots.eta", "must be positive");
    if (offshoots->lambda < 0.0) fail("offshoots.lambda", "must be nonnegative");
    if (offshoots->steps < 1) fail("offshoots.steps", "must be >= 1");
  }
  try {
    const CompletionProblem p = problem.build();
    arch.build(p.cols(), p.rows());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail("problem", e.what());
  }
}

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

// Walks a mapping, rejecting keys that are never read.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsMap())
      throw ConfigError(path_.empty() ? "<root>" : path_, line_of(node_), "expected a mapping");
  }

  std::string key(const std::string& name) const {
    return path_.empty() ? name : path_ + "." + name;
  }

  YAML::Node get(const std::string& name) {
    allowed_.insert(name);
    // Const lookup never inserts; a missing key yields an undefined node.
    static const YAML::Node empty(YAML::NodeType::Map);
    const YAML::Node& view = node_ && node_.IsMap() ? node_ : empty;
    return view[name];
  }

  bool has(const std::string& name) { return static_cast<bool>(get(name)); }

  template <typename T>
  T as(const std::string& name, T fallback) {
    const YAML::Node n = get(name);
    if (!n) return fallback;
    return convert<T>(n, key(name));
  }

  template <typename T>
  T required(const std::string& name) {
    const YAML::Node n = get(name);
    if (!n) throw ConfigError(key(name), line_of(node_), "missing required key");
    return convert<T>(n, key(name));
  }

  Section child(const std::string& name) { return Section(get(name), key(name)); }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!allowed_.count(k)) throw ConfigError(key(k), line_of(kv.first), "unknown key");
    }
  }

  const YAML::Node& node() const { return node_; }

  template <typename T>
  static T convert(const YAML::Node& n, const std::string& key) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (n.IsNull()) return std::numeric_limits<double>::quiet_NaN();
      }
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(key, line_of(n), "invalid value");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> allowed_;
};

PhaseSpec read_phase(Section s, bool need_steps) {
  PhaseSpec p;
  p.steps = need_steps ? s.required<long>("steps") : s.as<long>("steps", 0);
  p.eta = s.required<double>("eta");
  p.lambda = s.required<double>("lambda");
  s.finish();
  return p;
}

template <typename T>
std::vector<T> read_list(const YAML::Node& n, const std::string& key) {
  if (!n) return {};
  if (!n.IsSequence()) throw ConfigError(key, line_of(n), "expected a list");
  std::vector<T> out;
  for (const auto& item : n) out.push_back(Section::convert<T>(item, key));
  return out;
}

ScheduleSpec read_schedule(Section s) {
  ScheduleSpec out;
  const int forms = int(s.has("segments")) + int(s.has("periodic")) + int(s.has("anneal"));
  if (forms != 1)
    throw ConfigError(s.key("segments"), line_of(s.node()),
                      "exactly one of segments, periodic or anneal is required");
  if (s.has("segments")) {
    out.kind = "segments";
    const YAML::Node list = s.get("segments");
    if (!list.IsSequence())
      throw ConfigError(s.key("segments"), line_of(list), "expected a list");
    for (const auto& item : list) {
      Section seg(item, s.key("segments"));
      Segment g;
      g.end_step = seg.required<long>("end");
      g.eta = seg.required<double>("eta");
      g.lambda = seg.required<double>("lambda");
      seg.finish();
      out.segments.push_back(g);
    }
  } else if (s.has("periodic")) {
    out.kind = "periodic";
    Section p = s.child("periodic");
    out.total = p.required<long>("total");
    const YAML::Node list = p.get("phases");
    if (!list || !list.IsSequence())
      throw ConfigError(p.key("phases"), line_of(p.node()), "expected a list of phases");
    for (const auto& item : list) out.phases.push_back(read_phase(Section(item, p.key("phases")), true));
    p.finish();
  } else {
    out.kind = "anneal";
    Section a = s.child("anneal");
    if (a.has("warmup")) out.warmup = read_phase(a.child("warmup"), true);
    out.high = read_phase(a.child("high"), false);
    out.low = read_phase(a.child("low"), true);
    out.noise_steps = read_list<long>(a.get("noise_steps"), a.key("noise_steps"));
    if (out.noise_steps.empty())
      throw ConfigError(a.key("noise_steps"), line_of(a.node()), "missing required key");
    a.finish();
  }
  s.finish();
  return out;
}

ExperimentConfig from_yaml(const YAML::Node& root) {
  ExperimentConfig c;
  Section top(root, "");
  c.name = top.as<std::string>("name", c.name);

  {
    Section p = top.child("problem");
    c.problem.kind = p.as<std::string>("kind", c.problem.kind);
    c.problem.epsilon = p.as<double>("epsilon", c.problem.epsilon);
    if (p.has("r_star")) c.problem.r_star = p.required<int>("r_star");
    const YAML::Node target = p.get("target");
    const YAML::Node observed = p.get("observed");
    if (c.problem.kind == "explicit") {
      if (!target || !target.IsSequence() || target.size() == 0)
        throw ConfigError(p.key("target"), line_of(p.node()), "explicit problems need a target");
      const int rows = static_cast<int>(target.size());
      const int cols = static_cast<int>(target[0].size());
      c.problem.target.resize(rows, cols);
      for (int i = 0; i < rows; ++i) {
        const auto row = read_list<double>(target[i], p.key("target"));
        if (static_cast<int>(row.size()) != cols)
          throw ConfigError(p.key("target"), line_of(target[i]), "ragged target rows");
        for (int j = 0; j < cols; ++j) c.problem.target(i, j) = row[j];
      }
      if (!observed || !observed.IsSequence())
        throw ConfigError(p.key("observed"), line_of(p.node()), "explicit problems need observed");
      for (const auto& item : observed) {
        const auto pair = read_list<int>(item, p.key("observed"));
        if (pair.size() != 2)
          throw ConfigError(p.key("observed"), line_of(item), "expected [row, col]");
        c.problem.observed.push_back({pair[0], pair[1]});
      }
    } else if (target || observed) {
      throw ConfigError(p.key(target ? "target" : "observed"), line_of(target ? target : observed),
                        "only explicit problems take a target");
    }
    p.finish();
  }
  {
    Section a = top.child("arch");
    c.arch.depth = a.as<int>("depth", c.arch.depth);
    c.arch.width = a.as<int>("width", c.arch.width);
    c.arch.widths = read_list<int>(a.get("widths"), a.key("widths"));
    a.finish();
  }
  {
    Section i = top.child("init");
    c.init_scale = i.as<double>("scale", c.init_scale);
    i.finish();
  }
  if (!top.has("schedule")) throw ConfigError("schedule", line_of(root), "missing required key");
  c.schedule = read_schedule(top.child("schedule"));

  const std::string mode = top.as<std::string>("mode", "sgd");
  if (mode == "sgd") c.mode = RunMode::sgd;
  else if (mode == "gd") c.mode = RunMode::gd;
  else throw ConfigError("mode", line_of(top.get("mode")), "expected sgd or gd");
  try {
    c.decay = parse_decay_convention(top.as<std::string>("decay_convention", "appendix"));
  } catch (const UsageError& e) {
    throw ConfigError("decay_convention", line_of(top.get("decay_convention")), e.what());
  }
  c.record_every = top.as<long>("record_every", c.record_every);
  c.layer_diagnostics = top.as<bool>("layer_diagnostics", c.layer_diagnostics);
  if (top.has("absorbing")) {
    Section a = top.child("absorbing");
    AbsorbingSpec s;
    s.r = a.required<int>("r");
    s.eps1 = a.required<double>("eps1");
    s.eps2 = a.required<double>("eps2");
    s.alpha = a.required<double>("alpha");
    s.cap = a.required<double>("cap");
    a.finish();
    c.absorbing = s;
  }
  if (top.has("offshoots")) {
    Section o = top.child("offshoots");
    OffshootSpec s;
    s.times = read_list<long>(o.get("times"), o.key("times"));
    s.eta = o.as<double>("eta", s.eta);
    s.lambda = o.as<double>("lambda", s.lambda);
    s.steps = o.as<long>("steps", s.steps);
    o.finish();
    c.offshoots = s;
  }
  {
    Section j = top.child("jump");
    c.jump.threshold = j.as<double>("threshold", c.jump.threshold);
    c.jump.sustain = j.as<long>("sustain", c.jump.sustain);
    j.finish();
  }
  {
    Section s = top.child("sweep");
    c.sweep.depths = read_list<int>(s.get("depths"), s.key("depths"));
    c.sweep.epsilons = read_list<double>(s.get("epsilons"), s.key("epsilons"));
    s.finish();
  }
  c.average_window = top.as<long>("average_window", c.average_window);
  c.rank_tol = top.as<double>("rank_tol", c.rank_tol);
  c.seeds = read_list<std::uint64_t>(top.get("seeds"), "seeds");
  if (top.has("output")) c.output = top.required<std::string>("output");
  {
    Section l = top.child("landscape");
    LandscapeSpec& s = c.landscape;
    s.lambda = l.as<double>("lambda", s.lambda);
    s.eta = l.as<double>("eta", s.eta);
    s.grad_tol = l.as<double>("grad_tol", s.grad_tol);
    s.max_steps = l.as<long>("max_steps", s.max_steps);
    s.rank_tol = l.as<double>("rank_tol", s.rank_tol);
    s.hessian = l.as<bool>("hessian", s.hessian);
    s.hessian_probes = l.as<int>("hessian_probes", s.hessian_probes);
    s.hessian_iters = l.as<int>("hessian_iters", s.hessian_iters);
    l.finish();
  }
  top.finish();
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("schedule", 0, "missing required key");
  ExperimentConfig c = from_yaml(root);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

namespace {

void emit_phase(YAML::Emitter& out, const PhaseSpec& p, bool with_steps) {
  out << YAML::Flow << YAML::BeginMap;
  if (with_steps) out << YAML::Key << "steps" << YAML::Value << p.steps;
  out << YAML::Key << "eta" << YAML::Value << p.eta;
  out << YAML::Key << "lambda" << YAML::Value << p.lambda;
  out << YAML::EndMap;
}

}  // namespace

std::string to_yaml(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;

  out << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << c.problem.kind;
  if (c.problem.kind == "two_by_two") {
    out << YAML::Key << "epsilon" << YAML::Value << c.problem.epsilon;
  } else {
    out << YAML::Key << "target" << YAML::Value << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < c.problem.target.rows(); ++i) {
      out << YAML::Flow << YAML::BeginSeq;
      for (Eigen::Index j = 0; j < c.problem.target.cols(); ++j) {
        const double v = c.problem.target(i, j);
        if (std::isnan(v)) out << YAML::Null;
        else out << v;
      }
      out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "observed" << YAML::Value << YAML::BeginSeq;
    for (const Entry& e : c.problem.observed)
      out << YAML::Flow << YAML::BeginSeq << e.row << e.col << YAML::EndSeq;
    out << YAML::EndSeq;
  }
  if (c.problem.r_star) out << YAML::Key << "r_star" << YAML::Value << *c.problem.r_star;
  out << YAML::EndMap;

  out << YAML::Key << "arch" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "depth" << YAML::Value << c.arch.depth;
  out << YAML::Key << "width" << YAML::Value << c.arch.width;
  if (!c.arch.widths.empty())
    out << YAML::Key << "widths" << YAML::Value << YAML::Flow << c.arch.widths;
  out << YAML::EndMap;

  out << YAML::Key << "init" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "scale" << YAML::Value << c.init_scale << YAML::EndMap;

  out << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  const ScheduleSpec& s = c.schedule;
  if (s.kind == "segments") {
    out << YAML::Key << "segments" << YAML::Value << YAML::BeginSeq;
    for (const Segment& g : s.segments)
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "end" << YAML::Value << g.end_step
          << YAML::Key << "eta" << YAML::Value << g.eta << YAML::Key << "lambda" << YAML::Value
          << g.lambda << YAML::EndMap;
    out << YAML::EndSeq;
  } else if (s.kind == "periodic") {
    out << YAML::Key << "periodic" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "total" << YAML::Value << s.total;
    out << YAML::Key << "phases" << YAML::Value << YAML::BeginSeq;
    for (const PhaseSpec& p : s.phases) emit_phase(out, p, true);
    out << YAML::EndSeq << YAML::EndMap;
  } else {
    out << YAML::Key << "anneal" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "warmup" << YAML::Value;
    emit_phase(out, s.warmup, true);
    out << YAML::Key << "high" << YAML::Value;
    emit_phase(out, s.high, false);
    out << YAML::Key << "low" << YAML::Value;
    emit_phase(out, s.low, true);
    out << YAML::Key << "noise_steps" << YAML::Value << YAML::Flow << s.noise_steps;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "mode" << YAML::Value << (c.mode == RunMode::sgd ? "sgd" : "gd");
  out << YAML::Key << "decay_convention" << YAML::Value << to_string(c.decay);
  out << YAML::Key << "record_every" << YAML::Value << c.record_every;
  out << YAML::Key << "layer_diagnostics" << YAML::Value << c.layer_diagnostics;
  if (c.absorbing) {
    const AbsorbingSpec& a = *c.absorbing;
    out << YAML::Key << "absorbing" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "r" << YAML::Value << a.r;
    out << YAML::Key << "eps1" << YAML::Value << a.eps1;
    out << YAML::Key << "eps2" << YAML::Value << a.eps2;
    out << YAML::Key << "alpha" << YAML::Value << a.alpha;
    out << YAML::Key << "cap" << YAML::Value << a.cap;
    out << YAML::EndMap;
  }
  if (c.offshoots) {
    const OffshootSpec& o = *c.offshoots;
    out << YAML::Key << "offshoots" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "times" << YAML::Value << YAML::Flow << o.times;
    out << YAML::Key << "eta" << YAML::Value << o.eta;
    out << YAML::Key << "lambda" << YAML::Value << o.lambda;
    out << YAML::Key << "steps" << YAML::Value << o.steps;
    out << YAML::EndMap;
  }
  out << YAML::Key << "jump" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "threshold" << YAML::Value << c.jump.threshold;
  out << YAML::Key << "sustain" << YAML::Value << c.jump.sustain << YAML::EndMap;
  if (!c.sweep.depths.empty() || !c.sweep.epsilons.empty()) {
    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    if (!c.sweep.depths.empty())
      out << YAML::Key << "depths" << YAML::Value << YAML::Flow << c.sweep.depths;
    if (!c.sweep.epsilons.empty())
      out << YAML::Key << "epsilons" << YAML::Value << YAML::Flow << c.sweep.epsilons;
    out << YAML::EndMap;
  }
  out << YAML::Key << "average_window" << YAML::Value << c.average_window;
  out << YAML::Key << "rank_tol" << YAML::Value << c.rank_tol;
  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << c.seeds;
  if (c.output) out << YAML::Key << "output" << YAML::Value << *c.output;
  const LandscapeSpec& l = c.landscape;
  out << YAML::Key << "landscape" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lambda" << YAML::Value << l.lambda;
  out << YAML::Key << "eta" << YAML::Value << l.eta;
  out << YAML::Key << "grad_tol" << YAML::Value << l.grad_tol;
  out << YAML::Key << "max_steps" << YAML::Value << l.max_steps;
  out << YAML::Key << "rank_tol" << YAML::Value << l.rank_tol;
  out << YAML::Key << "hessian" << YAML::Value << l.hessian;
  out << YAML::Key << "hessian_probes" << YAML::Value << l.hessian_probes;
  out << YAML::Key << "hessian_iters" << YAML::Value << l.hessian_iters;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3", "fig4"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.problem.kind = "two_by_two";
  c.arch.width = 100;
  c.init_scale = 0.5;
  c.mode = RunMode::sgd;
  c.decay = DecayConvention::sample_loss;
  c.record_every = 10;
  c.layer_diagnostics = true;
  c.seeds = {0, 1, 2, 3, 4};
  if (name == "fig1") {
    c.problem.epsilon = 0.25;
    c.arch.depth = 3;
    c.schedule.kind = "segments";
    c.schedule.segments = {{500, 0.03, 0.1}, {10500, 0.2, 0.1}};
    OffshootSpec o;
    for (long t = 500; t <= 10000; t += 500) o.times.push_back(t);
    o.eta = 0.02;
    o.lambda = 0.001;
    o.steps = 20000;
    c.offshoots = o;
    c.average_window = 2000;
  } else if (name == "fig2") {
    c.problem.epsilon = 0.1;
    c.arch.depth = 3;
    c.sweep.depths = {3, 4};
    c.schedule.kind = "segments";
    c.schedule.segments = {{500, 0.03, 0.1}, {5000, 0.25, 0.1}, {8000, 0.05, 0.001}};
    c.average_window = 1000;
  } else if (name == "fig3") {
    c.problem.epsilon = 0.25;
    c.arch.depth = 4;
    c.sweep.epsilons = {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0};
    c.schedule.kind = "anneal";
    c.schedule.warmup = {500, 0.03, 0.1};
    c.schedule.high = {0, 0.2, 0.1};
    c.schedule.low = {4000, 0.02, 0.001};
    c.schedule.noise_steps = {0, 1000, 2000, 4000, 8000};
    c.average_window = 1000;
    c.layer_diagnostics = false;
  } else if (name == "fig4") {
    c.problem.epsilon = 0.2;
    c.arch.depth = 3;
    c.schedule.kind = "periodic";
    c.schedule.total = 10000;
    c.schedule.phases = {{1000, 0.1, 0.001}, {1000, 0.4, 0.1}};
    c.average_window = 500;
  } else {
    throw UsageError("unknown preset '" + name + "' (expected fig1, fig2, fig3 or fig4)");
  }
  c.validate();
  return c;
}

}  // namespace dln
