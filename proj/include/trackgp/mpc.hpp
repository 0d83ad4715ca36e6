#pragma once

// Tracking MPC for the scalar linear plant with a terminal equality
// constraint on the reference. The optimal control problem is solved by
// dynamic programming: backward feasibility intervals per stage, value
// functions on state grids, and a 1-D input search refined twice around the
// incumbent.

#include <span>
#include <string>
#include <vector>

#include "trackgp/gp.hpp"
#include "trackgp/reachability.hpp"

namespace trackgp {

struct MPCConfig {
  int horizon = 10;
  double state_weight = 1.0;
  double input_weight = 0.1;
  int input_grid_size = 41;
  bool terminal_equality = true;

  void validate() const;
};

inline constexpr double kTerminalTolerance = 1e-6;

/// u_r(k) = (x_r(k+1) - a x_r(k)) / b, unclipped.
std::vector<double> reference_input(const LinearSystem1D& sys, std::span<const double> reference);

struct OcpSolution {
  bool feasible = false;
  std::vector<double> inputs;  // N entries
  std::vector<double> states;  // N + 1 entries, states[0] = x0
  double cost = 0.0;
};

/// x_ref holds N + 1 samples, u_ref N samples.
OcpSolution solve_ocp(const LinearSystem1D& sys, double x0, std::span<const double> x_ref,
                      std::span<const double> u_ref, const MPCConfig& config);

struct ClosedLoopStep {
  int k = 0;
  double t = 0.0;
  double x = 0.0;
  double u = 0.0;
  double x_ref = 0.0;
  double u_ref = 0.0;
  double error = 0.0;
  bool feasible = false;
  /// The shifted previous plan, extended by the reference input, is admissible.
  bool recursively_feasible = false;
};

struct ClosedLoopTrace {
  std::vector<ClosedLoopStep> steps;
  bool completed = false;
  std::string status;
  double cost = 0.0;

  double max_error() const;
};

/// Receding-horizon simulation on the posterior mean sampled at T_s k.
/// Throws PreconditionViolation unless that reference is trackable over
/// steps + N samples.
ClosedLoopTrace simulate_closed_loop(const LinearSystem1D& sys, const GPPosterior& reference,
                                     double x0, int steps, const MPCConfig& config);

/// Same loop on an explicit reference of at least steps + N + 1 samples.
ClosedLoopTrace simulate_closed_loop(const LinearSystem1D& sys, std::span<const double> reference,
                                     double x0, int steps, const MPCConfig& config);

}  // namespace trackgp
