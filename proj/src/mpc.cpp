#include "trackgp/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trackgp/errors.hpp"
#include "trackgp/hyperopt.hpp"

namespace trackgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// States from which some admissible input lands in `target`.
Interval preimage(const LinearSystem1D& sys, const Interval& target) {
  const Interval effect = sys.input_effect();
  const double lo = target.lo - effect.hi;
  const double hi = target.hi - effect.lo;
  if (sys.a > 0.0) return {lo / sys.a, hi / sys.a};
  if (sys.a < 0.0) return {hi / sys.a, lo / sys.a};
  return (lo <= 0.0 && 0.0 <= hi) ? Interval{-kInf, kInf} : Interval{1.0, 0.0};
}

// Inputs in U that move x into `target`.
Interval admissible_inputs(const LinearSystem1D& sys, double x, const Interval& target) {
  const double lo = (target.lo - sys.a * x) / sys.b;
  const double hi = (target.hi - sys.a * x) / sys.b;
  return Interval{std::min(lo, hi), std::max(lo, hi)}.intersect(sys.input_box);
}

// Piecewise-linear value function on a sorted state grid.
struct ValueTable {
  std::vector<double> nodes;
  std::vector<double> values;
  bool zero = false;  // terminal stage: identically 0 on its set

  double operator()(double x) const {
    if (zero) return 0.0;
    if (nodes.empty()) return kInf;
    const double tol = 1e-9 * std::max(1.0, std::abs(x));
    if (x < nodes.front()) return x >= nodes.front() - tol ? values.front() : kInf;
    if (x > nodes.back()) return x <= nodes.back() + tol ? values.back() : kInf;
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    if (it == nodes.end()) return values.back();
    const std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
    if (hi == 0) return values.front();
    const std::size_t lo = hi - 1;
    const double span = nodes[hi] - nodes[lo];
    if (span <= 0.0) return values[lo];
    const double w = (x - nodes[lo]) / span;
    return (1.0 - w) * values[lo] + w * values[hi];
  }
};

class DynamicProgram {
 public:
  DynamicProgram(const LinearSystem1D& sys, std::span<const double> x_ref,
                 std::span<const double> u_ref, const MPCConfig& cfg)
      : sys_(sys), x_ref_(x_ref), u_ref_(u_ref), cfg_(cfg) {}

  bool build() {
    const int n = cfg_.horizon;
    sets_.assign(static_cast<std::size_t>(n) + 1, Interval{});
    Interval terminal = sys_.state_box;
    if (cfg_.terminal_equality) {
      const double target = x_ref_[static_cast<std::size_t>(n)];
      terminal = Interval{target - kTerminalTolerance, target + kTerminalTolerance}.intersect(
          sys_.state_box);
    }
    sets_[static_cast<std::size_t>(n)] = terminal;
    if (terminal.empty()) return false;
    for (int j = n - 1; j >= 0; --j) {
      const Interval s = preimage(sys_, sets_[static_cast<std::size_t>(j) + 1]).intersect(sys_.state_box);
      if (s.empty()) return false;
      sets_[static_cast<std::size_t>(j)] = s;
    }

    tables_.assign(static_cast<std::size_t>(n) + 1, ValueTable{});
    tables_[static_cast<std::size_t>(n)].zero = true;
    for (int j = n - 1; j >= 1; --j) {
      ValueTable& table = tables_[static_cast<std::size_t>(j)];
      table.nodes = state_grid(j);
      table.values.reserve(table.nodes.size());
      for (double x : table.nodes) table.values.push_back(best_input(j, x).second);
    }
    return true;
  }

  const Interval& set(int j) const { return sets_[static_cast<std::size_t>(j)]; }

  /// (input, cost-to-go) minimizing the stage cost plus the next table.
  std::pair<double, double> best_input(int j, double x) const {
    const std::size_t js = static_cast<std::size_t>(j);
    const Interval range = admissible_inputs(sys_, x, sets_[js + 1]);
    if (range.lo > range.hi) {
      // Rounding can invert a degenerate interval by a few ulps.
      if (range.lo - range.hi > 1e-12 * std::max(1.0, std::abs(range.lo))) return {0.0, kInf};
    }
    const Interval inputs{std::min(range.lo, range.hi), std::max(range.lo, range.hi)};
    const ValueTable& next = tables_[js + 1];
    auto cost = [&](double u) {
      const double dx = x - x_ref_[js];
      const double du = u - u_ref_[js];
      return cfg_.state_weight * dx * dx + cfg_.input_weight * du * du +
             next(sys_.a * x + sys_.b * u);
    };
    auto clamp = [&](double u) { return std::clamp(u, inputs.lo, inputs.hi); };

    double best_u = clamp(u_ref_[js]);
    double best_cost = kInf;
    auto consider = [&](double u) {
      const double c = cost(u);
      if (c < best_cost) {
        best_cost = c;
        best_u = u;
      }
    };
    if (j + 1 == cfg_.horizon && cfg_.terminal_equality) {
      consider(clamp((x_ref_[js + 1] - sys_.a * x) / sys_.b));
    }
    consider(clamp(u_ref_[js]));
    const int g = std::max(2, cfg_.input_grid_size);
    Interval window = inputs;
    for (int pass = 0; pass < 3; ++pass) {
      const double step = window.width() / (g - 1);
      for (int i = 0; i < g; ++i) consider(i + 1 == g ? window.hi : window.lo + i * step);
      window = Interval{best_u - step, best_u + step}.intersect(inputs);
      if (!(step > 0.0)) break;
    }
    return {best_u, best_cost};
  }

 private:
  std::vector<double> state_grid(int j) const {
    const Interval s = sets_[static_cast<std::size_t>(j)];
    const int g = std::max(2, cfg_.input_grid_size);
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(g) + 1);
    for (int i = 0; i < g; ++i) nodes.push_back(i + 1 == g ? s.hi : s.lo + (s.hi - s.lo) * i / (g - 1));
    const double r = x_ref_[static_cast<std::size_t>(j)];
    if (s.contains(r)) nodes.push_back(r);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
  }

  const LinearSystem1D& sys_;
  std::span<const double> x_ref_;
  std::span<const double> u_ref_;
  const MPCConfig& cfg_;
  std::vector<Interval> sets_;
  std::vector<ValueTable> tables_;
};

}  // namespace

void MPCConfig::validate() const {
  if (horizon < 1) throw ConfigError("MPC horizon must be >= 1");
  if (!(state_weight > 0.0)) throw ConfigError("state weight must be positive");
  if (!(input_weight >= 0.0)) throw ConfigError("input weight must be non-negative");
  if (input_grid_size < 2) throw ConfigError("input grid needs at least 2 points");
}

double ClosedLoopTrace::max_error() const {
  double e = 0.0;
  for (const auto& s : steps) e = std::max(e, s.error);
  return e;
}

std::vector<double> reference_input(const LinearSystem1D& sys, std::span<const double> reference) {
  if (reference.size() < 2) throw DomainError("reference input needs at least two samples");
  std::vector<double> u(reference.size() - 1);
  for (std::size_t k = 0; k + 1 < reference.size(); ++k) {
    u[k] = (reference[k + 1] - sys.a * reference[k]) / sys.b;
  }
  return u;
}

OcpSolution solve_ocp(const LinearSystem1D& sys, double x0, std::span<const double> x_ref,
                      std::span<const double> u_ref, const MPCConfig& config) {
  config.validate();
  const int n = config.horizon;
  if (x_ref.size() < static_cast<std::size_t>(n) + 1 || u_ref.size() < static_cast<std::size_t>(n)) {
    throw DomainError("reference window shorter than the MPC horizon");
  }
  OcpSolution sol;
  DynamicProgram dp(sys, x_ref, u_ref, config);
  if (!dp.build() || !dp.set(0).contains(x0, kBoxTolerance)) return sol;

  double x = x0;
  sol.states.push_back(x);
  for (int j = 0; j < n; ++j) {
    const auto [u, cost_to_go] = dp.best_input(j, x);
    if (!std::isfinite(cost_to_go)) return OcpSolution{};
    const double dx = x - x_ref[static_cast<std::size_t>(j)];
    const double du = u - u_ref[static_cast<std::size_t>(j)];
    sol.cost += config.state_weight * dx * dx + config.input_weight * du * du;
    sol.inputs.push_back(u);
    x = sys.step(x, u);
    sol.states.push_back(x);
  }
  sol.feasible = true;
  return sol;
}

ClosedLoopTrace simulate_closed_loop(const LinearSystem1D& sys, std::span<const double> reference,
                                     double x0, int steps, const MPCConfig& config) {
  config.validate();
  const int n = config.horizon;
  const std::size_t needed = static_cast<std::size_t>(steps + n) + 1;
  if (steps < 1 || reference.size() < needed) {
    throw DomainError("reference shorter than steps + horizon + 1 samples");
  }
  const auto window = reference.first(needed);
  const TrackabilityReport report = check_trackable(sys, window);
  if (!report.trackable) {
    std::ostringstream msg;
    msg << "reference is not trackable (" << to_string(*report.violation_kind) << " at k="
        << *report.first_violation_index << ")";
    throw PreconditionViolation(msg.str());
  }
  const std::vector<double> u_ref = reference_input(sys, window);

  ClosedLoopTrace trace;
  double x = x0;
  for (int k = 0; k < steps; ++k) {
    const std::size_t ks = static_cast<std::size_t>(k);
    ClosedLoopStep step;
    step.k = k;
    step.t = sys.sampling_time * k;
    step.x = x;
    step.x_ref = window[ks];
    step.u_ref = u_ref[ks];
    step.error = std::abs(x - window[ks]);
    const OcpSolution sol = solve_ocp(sys, x, window.subspan(ks, static_cast<std::size_t>(n) + 1),
                                      std::span<const double>(u_ref).subspan(ks, static_cast<std::size_t>(n)),
                                      config);
    if (!sol.feasible) {
      trace.steps.push_back(step);
      trace.status = "optimal control problem infeasible at k=" + std::to_string(k);
      return trace;
    }
    step.u = sol.inputs.front();
    step.feasible = true;
    const double dx = x - window[ks];
    const double du = step.u - u_ref[ks];
    trace.cost += config.state_weight * dx * dx + config.input_weight * du * du;

    // Shifted plan with the reference input appended.
    double xs = sys.step(x, step.u);
    bool admissible = sys.state_box.contains(xs, kBoxTolerance);
    for (int j = 1; j <= n && admissible; ++j) {
      const double u = j < n ? sol.inputs[static_cast<std::size_t>(j)] : u_ref[ks + static_cast<std::size_t>(n)];
      admissible = sys.input_box.contains(u, kBoxTolerance);
      xs = sys.step(xs, u);
      admissible = admissible && sys.state_box.contains(xs, kBoxTolerance);
    }
    if (config.terminal_equality) {
      admissible = admissible &&
                   std::abs(xs - window[ks + static_cast<std::size_t>(n) + 1]) <= 2.0 * kTerminalTolerance;
    }
    step.recursively_feasible = admissible;
    trace.steps.push_back(step);
    x = sys.step(x, step.u);
  }
  trace.completed = true;
  trace.status = "ok";
  return trace;
}

ClosedLoopTrace simulate_closed_loop(const LinearSystem1D& sys, const GPPosterior& reference,
                                     double x0, int steps, const MPCConfig& config) {
  config.validate();
  if (steps < 1) throw DomainError("simulation needs at least one step");
  const auto samples = sample_reference(reference, sys.sampling_time, steps + config.horizon);
  return simulate_closed_loop(sys, std::span<const double>(samples), x0, steps, config);
}

}  // namespace trackgp
