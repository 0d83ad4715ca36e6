#pragma once

// NLML minimization over log-space hyperparameters, optionally subject to
// trackability constraints on the posterior mean handled by an exterior
// quadratic penalty.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

#include "trackgp/gp.hpp"
#include "trackgp/kernels.hpp"
#include "trackgp/reachability.hpp"

namespace trackgp {

/// Per-parameter bounds in natural (positive) units.
struct ParameterBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  bool empty() const { return lower.size() == 0; }
};

struct OptimizerConfig {
  int multistart_count = 4;
  /// Bounds enforced during the search. Empty means [1e-3, 1e3] per parameter.
  ParameterBox search_box;
  /// Region random starts are drawn from (log-uniform). Empty means search_box.
  ParameterBox start_box;
  /// Deterministic starts tried before the random ones (natural units).
  std::vector<Eigen::VectorXd> warm_starts;

  /// Fixed noise variance, or the start value when optimize_noise is set.
  double noise_variance = 1e-4;
  bool optimize_noise = false;
  Interval noise_box{1e-8, 1.0};

  double penalty_initial = 1.0;
  double penalty_growth = 10.0;
  int max_outer_iterations = 15;
  double constraint_tolerance = 1e-6;
  double inner_solver_tolerance = 1e-10;
  int max_inner_evaluations = 2000;
  std::uint64_t rng_seed = 1;
  /// Starts evaluated concurrently when > 1; results do not depend on it.
  int threads = 1;

  void validate(const KernelSpec& spec) const;
};

/// Pointwise constraints of the constrained fit: samples m+(T_s k),
/// k = 0..horizon_steps, must stay in X and in the one-step tube.
struct ConstraintSet {
  int horizon_steps = 0;
  LinearSystem1D system;
};

struct PenaltyIterate {
  double penalty = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  double nlml = 0.0;
  double violation = 0.0;
};

struct TrainOutcome {
  Hyperparameters theta;
  double nlml_value = 0.0;
  bool feasible = false;
  /// Constraint violation against the untightened constraints.
  double max_violation = 0.0;
  int iterations = 0;
  int start_index = -1;
  int evaluations = 0;
  /// Penalty loop of the selected start.
  std::vector<PenaltyIterate> history;
};

/// Violation of one candidate posterior. The penalty uses it against the
/// tightened constraints; `report` measures the same quantity against the
/// original ones.
struct ViolationModel {
  std::function<double(const GPPosterior&)> penalty;
  std::function<double(const GPPosterior&)> report;
};

/// Multistart exterior-penalty minimization of nlml + rho * violation^2.
/// An empty model gives the plain NLML fit.
TrainOutcome penalized_minimize(const KernelSpec& spec, const MeanSpec& mean, const Dataset& data,
                                const OptimizerConfig& config, const ViolationModel& model);

/// Posterior mean at t = T_s k for k = 0..horizon_steps.
std::vector<double> sample_reference(const GPPosterior& posterior, double sampling_time,
                                     int horizon_steps);

double constraint_violation(const KernelSpec& spec, const MeanSpec& mean,
                            const Hyperparameters& theta, const Dataset& data,
                            const ConstraintSet& constraints);

TrainOutcome minimize_nlml(const KernelSpec& spec, const MeanSpec& mean, const Dataset& data,
                           const OptimizerConfig& config);

/// Infeasibility is reported through TrainOutcome::feasible, never thrown.
TrainOutcome minimize_nlml_constrained(const KernelSpec& spec, const MeanSpec& mean,
                                       const Dataset& data, const ConstraintSet& constraints,
                                       const OptimizerConfig& config);

}  // namespace trackgp
