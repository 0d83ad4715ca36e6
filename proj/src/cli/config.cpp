#include "trackgp/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "trackgp/errors.hpp"

namespace trackgp::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("config line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& v, int line) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    fail(line, "expected a finite number, got '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string& v, int line) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) fail(line, "expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& v, int line) {
  const long long x = to_integer(v, line);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    fail(line, "integer out of range: " + v);
  }
  return static_cast<int>(x);
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, "expected true or false, got '" + v + "'");
}

Eigen::VectorXd to_vector(const std::string& v, int line) {
  std::vector<double> xs;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) xs.push_back(to_double(trim(item), line));
  if (xs.empty()) fail(line, "expected a comma-separated list");
  return Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"system.a", [](auto& c, auto& v, int l) { c.system.a = to_double(v, l); }},
      {"system.b", [](auto& c, auto& v, int l) { c.system.b = to_double(v, l); }},
      {"system.x_lo", [](auto& c, auto& v, int l) { c.system.state_box.lo = to_double(v, l); }},
      {"system.x_hi", [](auto& c, auto& v, int l) { c.system.state_box.hi = to_double(v, l); }},
      {"system.u_lo", [](auto& c, auto& v, int l) { c.system.input_box.lo = to_double(v, l); }},
      {"system.u_hi", [](auto& c, auto& v, int l) { c.system.input_box.hi = to_double(v, l); }},
      {"system.ts", [](auto& c, auto& v, int l) { c.system.sampling_time = to_double(v, l); }},
      {"kernel.family",
       [](auto& c, auto& v, int l) {
         try {
           c.family = parse_kernel_family(v);
         } catch (const ConfigError& e) {
           fail(l, e.what());
         }
       }},
      {"kernel.theta_lo", [](auto& c, auto& v, int l) { c.optimizer.search_box.lower = to_vector(v, l); }},
      {"kernel.theta_hi", [](auto& c, auto& v, int l) { c.optimizer.search_box.upper = to_vector(v, l); }},
      {"kernel.start_lo", [](auto& c, auto& v, int l) { c.optimizer.start_box.lower = to_vector(v, l); }},
      {"kernel.start_hi", [](auto& c, auto& v, int l) { c.optimizer.start_box.upper = to_vector(v, l); }},
      {"kernel.noise_variance",
       [](auto& c, auto& v, int l) { c.optimizer.noise_variance = to_double(v, l); }},
      {"kernel.noise_variance_box",
       [](auto& c, auto& v, int l) {
         const Eigen::VectorXd box = to_vector(v, l);
         if (box.size() != 2) fail(l, "noise_variance_box needs two values");
         c.optimizer.optimize_noise = true;
         c.optimizer.noise_box = Interval{box(0), box(1)};
       }},
      {"mean.constant", [](auto& c, auto& v, int l) { c.mean_constant = to_double(v, l); }},
      {"mode",
       [](auto& c, auto& v, int l) {
         if (v == "asymptotic") c.mode = TrainMode::Asymptotic;
         else if (v == "periodic") c.mode = TrainMode::Periodic;
         else if (v == "unconstrained") c.mode = TrainMode::Unconstrained;
         else fail(l, "unknown mode '" + v + "'");
       }},
      {"asymptotic.k_init", [](auto& c, auto& v, int l) { c.k_init = to_int(v, l); }},
      {"asymptotic.k_max", [](auto& c, auto& v, int l) { c.k_max = to_int(v, l); }},
      {"asymptotic.k_stride", [](auto& c, auto& v, int l) { c.k_stride = to_int(v, l); }},
      {"asymptotic.followup_multistart",
       [](auto& c, auto& v, int l) { c.followup_multistart = to_int(v, l); }},
      {"periodic.k_bar", [](auto& c, auto& v, int l) { c.k_bar = to_int(v, l); }},
      {"periodic.eta", [](auto& c, auto& v, int l) { c.eta = to_int(v, l); }},
      {"periodic.delta", [](auto& c, auto& v, int l) { c.delta = to_double(v, l); }},
      {"optimizer.multistart",
       [](auto& c, auto& v, int l) { c.optimizer.multistart_count = to_int(v, l); }},
      {"optimizer.penalty_initial",
       [](auto& c, auto& v, int l) { c.optimizer.penalty_initial = to_double(v, l); }},
      {"optimizer.penalty_growth",
       [](auto& c, auto& v, int l) { c.optimizer.penalty_growth = to_double(v, l); }},
      {"optimizer.max_outer_iterations",
       [](auto& c, auto& v, int l) { c.optimizer.max_outer_iterations = to_int(v, l); }},
      {"optimizer.constraint_tolerance",
       [](auto& c, auto& v, int l) { c.optimizer.constraint_tolerance = to_double(v, l); }},
      {"optimizer.inner_tolerance",
       [](auto& c, auto& v, int l) { c.optimizer.inner_solver_tolerance = to_double(v, l); }},
      {"optimizer.max_inner_evaluations",
       [](auto& c, auto& v, int l) { c.optimizer.max_inner_evaluations = to_int(v, l); }},
      {"optimizer.threads", [](auto& c, auto& v, int l) { c.optimizer.threads = to_int(v, l); }},
      {"seed",
       [](auto& c, auto& v, int l) {
         const long long s = to_integer(v, l);
         if (s < 0) fail(l, "seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"output.dir", [](auto& c, auto& v, int) { c.output_dir = v; }},
      {"predict.horizon_steps", [](auto& c, auto& v, int l) { c.horizon_steps = to_int(v, l); }},
      {"generate.kind",
       [](auto& c, auto& v, int l) {
         if (v == "transient") c.generate.kind = GeneratorKind::Transient;
         else if (v == "periodic_example") c.generate.kind = GeneratorKind::PeriodicExample;
         else fail(l, "unknown generator '" + v + "'");
       }},
      {"generate.n", [](auto& c, auto& v, int l) { c.generate.n = to_int(v, l); }},
      {"generate.t_start", [](auto& c, auto& v, int l) { c.generate.t_start = to_double(v, l); }},
      {"generate.t_end", [](auto& c, auto& v, int l) { c.generate.t_end = to_double(v, l); }},
      {"generate.endpoint", [](auto& c, auto& v, int l) { c.generate.endpoint = to_bool(v, l); }},
      {"generate.noise_std", [](auto& c, auto& v, int l) { c.generate.noise_std = to_double(v, l); }},
      {"generate.amplitude", [](auto& c, auto& v, int l) { c.generate.amplitude = to_double(v, l); }},
      {"generate.decay", [](auto& c, auto& v, int l) { c.generate.decay = to_double(v, l); }},
      {"generate.frequency", [](auto& c, auto& v, int l) { c.generate.frequency = to_double(v, l); }},
      {"simulate.steps", [](auto& c, auto& v, int l) { c.simulate_steps = to_int(v, l); }},
      {"simulate.x0", [](auto& c, auto& v, int l) { c.simulate_x0 = to_double(v, l); }},
      {"mpc.horizon", [](auto& c, auto& v, int l) { c.mpc.horizon = to_int(v, l); }},
      {"mpc.q", [](auto& c, auto& v, int l) { c.mpc.state_weight = to_double(v, l); }},
      {"mpc.r", [](auto& c, auto& v, int l) { c.mpc.input_weight = to_double(v, l); }},
      {"mpc.input_grid", [](auto& c, auto& v, int l) { c.mpc.input_grid_size = to_int(v, l); }},
      {"mpc.terminal_equality",
       [](auto& c, auto& v, int l) { c.mpc.terminal_equality = to_bool(v, l); }},
  };
  return table;
}

void validate(const ExperimentConfig& c) {
  c.system.validate();
  const KernelSpec spec{c.family};
  c.optimizer.validate(spec);
  if (!(c.optimizer.noise_variance > 0.0)) throw ConfigError("kernel.noise_variance must be positive");
  if (c.optimizer.optimize_noise &&
      !(c.optimizer.noise_box.lo > 0.0 && c.optimizer.noise_box.lo <= c.optimizer.noise_box.hi)) {
    throw ConfigError("kernel.noise_variance_box needs 0 < lo <= hi");
  }
  if (c.optimizer.start_box.empty() != (c.optimizer.start_box.upper.size() == 0)) {
    throw ConfigError("kernel.start_lo and kernel.start_hi must be given together");
  }
  if (c.optimizer.search_box.lower.size() != c.optimizer.search_box.upper.size()) {
    throw ConfigError("kernel.theta_lo and kernel.theta_hi must be given together");
  }
  switch (c.mode) {
    case TrainMode::Asymptotic:
      if (c.family != KernelFamily::SquaredExponential) {
        throw ConfigError("mode asymptotic needs kernel.family = squared_exponential");
      }
      c.asymptotic_config().validate();
      break;
    case TrainMode::Periodic:
      if (c.family != KernelFamily::Periodic) throw ConfigError("mode periodic needs kernel.family = periodic");
      c.periodic_config().validate(c.system);
      break;
    case TrainMode::Unconstrained:
      break;
  }
  if (c.horizon_steps && *c.horizon_steps < 1) throw ConfigError("predict.horizon_steps must be >= 1");
  if (c.generate.n < 1) throw ConfigError("generate.n must be >= 1");
  if (!(c.generate.t_start >= 0.0) || !(c.generate.t_end >= c.generate.t_start)) {
    throw ConfigError("generate needs 0 <= t_start <= t_end");
  }
  if (c.generate.n > 1 && !(c.generate.t_end > c.generate.t_start)) {
    throw ConfigError("generate needs t_end > t_start for more than one point");
  }
  if (!(c.generate.noise_std >= 0.0)) throw ConfigError("generate.noise_std must be >= 0");
  if (!(c.generate.decay > 0.0)) throw ConfigError("generate.decay must be positive");
  if (c.simulate_steps < 1) throw ConfigError("simulate.steps must be >= 1");
  c.mpc.validate();
}

}  // namespace

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Asymptotic: return "asymptotic";
    case TrainMode::Periodic: return "periodic";
    case TrainMode::Unconstrained: return "unconstrained";
  }
  return "unknown";
}

AsymptoticTrainConfig ExperimentConfig::asymptotic_config() const {
  AsymptoticTrainConfig out;
  out.k_init = k_init;
  out.k_max = k_max;
  out.k_stride = k_stride;
  out.followup_multistart = followup_multistart;
  out.mean = MeanSpec{mean_constant};
  out.optimizer = optimizer;
  out.optimizer.rng_seed = seed;
  return out;
}

PeriodicTrainConfig ExperimentConfig::periodic_config() const {
  PeriodicTrainConfig out;
  out.k_bar = k_bar;
  out.eta = eta;
  out.delta = delta;
  out.mean = MeanSpec{mean_constant};
  out.optimizer = optimizer;
  out.optimizer.rng_seed = seed;
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) fail(line, "unknown key '" + key + "'");
    if (!seen.insert(key).second) fail(line, "duplicate key '" + key + "'");
    if (value.empty()) fail(line, "missing value for '" + key + "'");
    it->second(cfg, value, line);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace trackgp::cli
