#pragma once

// Iterative constrained training for references that settle to a constant:
// the constraint horizon k_bar grows until the kernel-decay bounds at
// t_bar = T_s k_bar certify the posterior mean for all later samples too.

#include <optional>
#include <vector>

#include "trackgp/errors.hpp"
#include "trackgp/gp.hpp"
#include "trackgp/hyperopt.hpp"
#include "trackgp/reachability.hpp"

namespace trackgp {

struct AsymptoticTrainConfig {
  int k_init = 70;
  int k_max = 400;
  /// Increment of k_bar per failed iteration.
  int k_stride = 1;
  MeanSpec mean;
  OptimizerConfig optimizer;
  /// Random starts after the first iteration; the previous optimum is always
  /// tried first. Negative means optimizer.multistart_count.
  int followup_multistart = -1;
  /// Test hook: accept regardless of the derivative-envelope check.
  bool skip_derivative_check = false;

  void validate() const;
};

/// One pass of the outer loop.
struct AsymptoticIteration {
  int k_bar = 0;
  Hyperparameters theta;
  double nlml = 0.0;
  bool feasible = false;
  bool lag_check = false;       // every data lag exceeds the monotonicity threshold
  bool state_check = false;     // mean envelope inside X
  bool tube_nonempty = false;
  bool derivative_check = false;  // derivative envelope inside the tube rates
  double mean = 0.0;
  double mean_bound = 0.0;
  double derivative = 0.0;
  double derivative_bound = 0.0;
  std::optional<TubeGrowth> tube;
};

struct AsymptoticCertificate {
  int k_final = 0;
  /// Constrained fit at k_final.
  TrainOutcome outcome;
  Hyperparameters theta;
  double nlml = 0.0;
  double mean_at_k = 0.0;
  double mean_bound_at_k = 0.0;
  double derivative_bound_at_k = 0.0;
  TubeGrowth tube;
  bool lag_check = false;
  bool state_check = false;
  bool derivative_check = false;
  std::vector<AsymptoticIteration> trace;
};

class NonTerminationError : public Error {
 public:
  NonTerminationError(const std::string& what, std::vector<AsymptoticIteration> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<AsymptoticIteration>& trace() const { return trace_; }

 private:
  std::vector<AsymptoticIteration> trace_;
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, int k_bar, TrainOutcome outcome,
                  std::vector<AsymptoticIteration> trace)
      : Error(what), k_bar_(k_bar), outcome_(std::move(outcome)), trace_(std::move(trace)) {}
  int k_bar() const { return k_bar_; }
  const TrainOutcome& outcome() const { return outcome_; }
  const std::vector<AsymptoticIteration>& trace() const { return trace_; }

 private:
  int k_bar_;
  TrainOutcome outcome_;
  std::vector<AsymptoticIteration> trace_;
};

/// Envelope checks at t_bar = T_s k_bar for a fixed posterior.
AsymptoticIteration evaluate_termination(const LinearSystem1D& sys, const GPPosterior& posterior,
                                         int k_bar, bool skip_derivative_check = false);

/// Squared-exponential kernel, constant prior mean. Throws InfeasibleError
/// when the constrained fit fails at some k_bar and NonTerminationError when
/// k_bar would exceed k_max.
AsymptoticCertificate train_asymptotic(const LinearSystem1D& sys, const Dataset& data,
                                       const AsymptoticTrainConfig& config);

/// Replays the certified mean over horizon_steps + 1 samples.
TrackabilityReport certify_all_time(const AsymptoticCertificate& certificate,
                                    const LinearSystem1D& sys, const GPPosterior& posterior,
                                    int horizon_steps);

}  // namespace trackgp
