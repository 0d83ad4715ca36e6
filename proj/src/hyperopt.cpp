#include "trackgp/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <string>

#include "trackgp/errors.hpp"
#include "trackgp/nelder_mead.hpp"

namespace trackgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ParameterBox default_box(int count) {
  return {Eigen::VectorXd::Constant(count, 1e-3), Eigen::VectorXd::Constant(count, 1e3)};
}

// Log-space decision vector: [log theta_1 .. log theta_p, (log sigma_n^2)].
struct Encoding {
  int parameters = 0;
  bool noise = false;
  double fixed_noise = 0.0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd start_lower;
  Eigen::VectorXd start_upper;

  Encoding(const KernelSpec& spec, const OptimizerConfig& config) {
    parameters = parameter_count(spec.family);
    noise = config.optimize_noise;
    fixed_noise = config.noise_variance;
    const ParameterBox search =
        config.search_box.empty() ? default_box(parameters) : config.search_box;
    const ParameterBox start = config.start_box.empty() ? search : config.start_box;
    const int dim = parameters + (noise ? 1 : 0);
    lower.resize(dim);
    upper.resize(dim);
    start_lower.resize(dim);
    start_upper.resize(dim);
    lower.head(parameters) = search.lower.array().log();
    upper.head(parameters) = search.upper.array().log();
    start_lower.head(parameters) = start.lower.array().log().max(lower.head(parameters).array());
    start_upper.head(parameters) = start.upper.array().log().min(upper.head(parameters).array());
    if (noise) {
      lower(parameters) = std::log(config.noise_box.lo);
      upper(parameters) = std::log(config.noise_box.hi);
      start_lower(parameters) = lower(parameters);
      start_upper(parameters) = upper(parameters);
    }
  }

  Hyperparameters decode(const Eigen::VectorXd& z) const {
    Hyperparameters theta;
    theta.values = z.head(parameters).array().exp();
    theta.noise_variance = noise ? std::exp(z(parameters)) : fixed_noise;
    return theta;
  }

  Eigen::VectorXd encode(const Eigen::VectorXd& values) const {
    Eigen::VectorXd z(lower.size());
    z.head(parameters) = values.array().log();
    if (noise) z(parameters) = std::log(fixed_noise);
    return z.cwiseMax(lower).cwiseMin(upper);
  }
};

struct Candidate {
  Eigen::VectorXd z;
  double nlml = kInf;
  double penalty_violation = kInf;
  double reported_violation = kInf;
  bool feasible = false;
  int iterations = 0;
  int evaluations = 0;
  std::vector<PenaltyIterate> history;
};

struct Evaluation {
  double nlml = kInf;
  double penalty_violation = kInf;
  double reported_violation = kInf;
};

Evaluation evaluate(const KernelSpec& spec, const MeanSpec& mean, const Dataset& data,
                    const Encoding& enc, const ViolationModel& model, const Eigen::VectorXd& z,
                    bool with_report) {
  Evaluation e;
  try {
    const GPPosterior posterior(spec, mean, enc.decode(z), data);
    e.nlml = posterior.nlml();
    if (!std::isfinite(e.nlml)) return Evaluation{};
    e.penalty_violation = model.penalty ? model.penalty(posterior) : 0.0;
    if (with_report) {
      e.reported_violation = model.report ? model.report(posterior) : e.penalty_violation;
    }
  } catch (const NumericalError&) {
    return Evaluation{};
  } catch (const ConfigError&) {
    return Evaluation{};
  }
  return e;
}

Candidate run_start(const KernelSpec& spec, const MeanSpec& mean, const Dataset& data,
                    const OptimizerConfig& config, const Encoding& enc,
                    const ViolationModel& model, Eigen::VectorXd start) {
  Candidate c;
  detail::SimplexOptions opt;
  opt.f_tolerance = config.inner_solver_tolerance;
  opt.max_evaluations = config.max_inner_evaluations;

  const bool constrained = static_cast<bool>(model.penalty);
  double rho = config.penalty_initial;
  Eigen::VectorXd z = std::move(start);
  const int outer_limit = constrained ? std::max(1, config.max_outer_iterations) : 1;
  for (int outer = 0; outer < outer_limit; ++outer) {
    auto objective = [&](const Eigen::VectorXd& x) {
      const Evaluation e = evaluate(spec, mean, data, enc, model, x, false);
      return e.nlml + rho * e.penalty_violation * e.penalty_violation;
    };
    PenaltyIterate it;
    it.penalty = rho;
    it.objective_before = objective(z);
    const detail::SimplexResult r = detail::nelder_mead(objective, z, enc.lower, enc.upper, opt);
    c.evaluations += r.evaluations + 1;
    ++c.iterations;
    // Keep the entry point if the local search could not improve on it.
    if (r.value <= it.objective_before || !std::isfinite(it.objective_before)) z = r.x;
    const Evaluation e = evaluate(spec, mean, data, enc, model, z, false);
    it.objective_after = e.nlml + rho * e.penalty_violation * e.penalty_violation;
    it.nlml = e.nlml;
    it.violation = e.penalty_violation;
    c.history.push_back(it);
    if (!std::isfinite(e.nlml)) break;
    if (e.penalty_violation <= config.constraint_tolerance) break;
    rho *= config.penalty_growth;
  }
  const Evaluation final_eval = evaluate(spec, mean, data, enc, model, z, true);
  c.z = z;
  c.nlml = final_eval.nlml;
  c.penalty_violation = final_eval.penalty_violation;
  c.reported_violation = final_eval.reported_violation;
  c.feasible = std::isfinite(c.nlml) && c.penalty_violation <= config.constraint_tolerance;
  return c;
}

// Feasible beats infeasible; then lower NLML (feasible) or lower violation
// (infeasible); ties go to the earlier start.
bool better(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.feasible) return a.nlml < b.nlml;
  if (a.penalty_violation != b.penalty_violation) return a.penalty_violation < b.penalty_violation;
  return a.nlml < b.nlml;
}

}  // namespace

void OptimizerConfig::validate(const KernelSpec& spec) const {
  const int p = parameter_count(spec.family);
  auto check_box = [&](const ParameterBox& box, const char* name) {
    if (box.empty()) return;
    if (box.lower.size() != p || box.upper.size() != p) {
      throw ConfigError(std::string(name) + " must have " + std::to_string(p) + " entries");
    }
    if (!((box.lower.array() > 0.0).all() && (box.lower.array() <= box.upper.array()).all())) {
      throw ConfigError(std::string(name) + " needs 0 < lower <= upper");
    }
  };
  check_box(search_box, "search box");
  check_box(start_box, "start box");
  for (const auto& w : warm_starts) {
    if (w.size() != p || !(w.array() > 0.0).all()) {
      throw ConfigError("warm start has the wrong size or a non-positive entry");
    }
  }
  if (multistart_count < 0 || (multistart_count == 0 && warm_starts.empty())) {
    throw ConfigError("at least one start is required");
  }
  if (!(penalty_initial > 0.0)) throw ConfigError("penalty_initial must be positive");
  if (!(penalty_growth > 1.0)) throw ConfigError("penalty_growth must exceed 1");
  if (max_outer_iterations < 1) throw ConfigError("max_outer_iterations must be >= 1");
  if (!(constraint_tolerance > 0.0)) throw ConfigError("constraint_tolerance must be positive");
  if (!(inner_solver_tolerance > 0.0)) throw ConfigError("inner_solver_tolerance must be positive");
  if (max_inner_evaluations < 1) throw ConfigError("max_inner_evaluations must be >= 1");
  if (!(noise_variance >= 0.0)) throw ConfigError("noise_variance must be non-negative");
  if (optimize_noise && !(noise_box.lo > 0.0 && noise_box.lo <= noise_box.hi)) {
    throw ConfigError("noise box needs 0 < lower <= upper");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

TrainOutcome penalized_minimize(const KernelSpec& spec, const MeanSpec& mean, const Dataset& data,
                                const OptimizerConfig& config, const ViolationModel& model) {
  config.validate(spec);
  if (data.size() == 0) throw DomainError("cannot fit hyperparameters to an empty dataset");
  const Encoding enc(spec, config);

  std::vector<Eigen::VectorXd> starts;
  for (const auto& w : config.warm_starts) starts.push_back(enc.encode(w));
  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < config.multistart_count; ++s) {
    Eigen::VectorXd z(enc.lower.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      z(i) = enc.start_lower(i) + unit(rng) * (enc.start_upper(i) - enc.start_lower(i));
    }
    starts.push_back(z);
  }

  std::vector<Candidate> candidates(starts.size());
  if (config.threads > 1 && starts.size() > 1) {
    std::vector<std::future<Candidate>> pending;
    pending.reserve(starts.size());
    for (const auto& s : starts) {
      pending.push_back(std::async(std::launch::async, [&, s] {
        return run_start(spec, mean, data, config, enc, model, s);
      }));
    }
    for (std::size_t i = 0; i < pending.size(); ++i) candidates[i] = pending[i].get();
  } else {
    for (std::size_t i = 0; i < starts.size(); ++i) {
      candidates[i] = run_start(spec, mean, data, config, enc, model, starts[i]);
    }
  }

  int best = -1;
  int total_evaluations = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    total_evaluations += candidates[i].evaluations;
    if (!std::isfinite(candidates[i].nlml)) continue;
    if (best < 0 || better(candidates[i], candidates[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw OptimizationError("no start produced a finite NLML");

  const Candidate& c = candidates[static_cast<std::size_t>(best)];
  TrainOutcome out;
  out.theta = enc.decode(c.z);
  out.nlml_value = c.nlml;
  out.feasible = c.feasible;
  out.max_violation = c.reported_violation;
  out.iterations = c.iterations;
  out.start_index = best;
  out.evaluations = total_evaluations;
  out.history = c.history;
  return out;
}

std::vector<double> sample_reference(const GPPosterior& posterior, double sampling_time,
                                     int horizon_steps) {
  std::vector<double> out(static_cast<std::size_t>(horizon_steps) + 1);
  for (int k = 0; k <= horizon_steps; ++k) {
    out[static_cast<std::size_t>(k)] = posterior.mean(sampling_time * k);
  }
  return out;
}

double constraint_violation(const KernelSpec& spec, const MeanSpec& mean,
                            const Hyperparameters& theta, const Dataset& data,
                            const ConstraintSet& constraints) {
  const GPPosterior posterior(spec, mean, theta, data);
  const auto ref = sample_reference(posterior, constraints.system.sampling_time,
                                    constraints.horizon_steps);
  return reference_violation(constraints.system, ref);
}

TrainOutcome minimize_nlml(const KernelSpec& spec, const MeanSpec& mean, const Dataset& data,
                           const OptimizerConfig& config) {
  TrainOutcome out = penalized_minimize(spec, mean, data, config, ViolationModel{});
  out.feasible = true;
  out.max_violation = 0.0;
  return out;
}

TrainOutcome minimize_nlml_constrained(const KernelSpec& spec, const MeanSpec& mean,
                                       const Dataset& data, const ConstraintSet& constraints,
                                       const OptimizerConfig& config) {
  constraints.system.validate();
  if (constraints.horizon_steps < 0) throw ConfigError("constraint horizon must be >= 0");
  const LinearSystem1D tight = constraints.system.tightened(config.constraint_tolerance);
  const double ts = constraints.system.sampling_time;
  const int horizon = constraints.horizon_steps;
  ViolationModel model;
  model.penalty = [tight, ts, horizon](const GPPosterior& p) {
    return reference_violation(tight, sample_reference(p, ts, horizon));
  };
  model.report = [sys = constraints.system, ts, horizon](const GPPosterior& p) {
    return reference_violation(sys, sample_reference(p, ts, horizon));
  };
  return penalized_minimize(spec, mean, data, config, model);
}

}  // namespace trackgp
