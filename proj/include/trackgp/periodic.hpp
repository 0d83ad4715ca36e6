#pragma once

// Constrained training for periodic references. The posterior mean and its
// derivative are bounded on whole time intervals (not only at samples) by a
// grid scan with a certified slack, and the derivative envelope of each of
// eta subintervals must sit inside the tube rates of that subinterval's
// state range.

#include <vector>

#include "trackgp/gp.hpp"
#include "trackgp/hyperopt.hpp"
#include "trackgp/reachability.hpp"

namespace trackgp {

struct PeriodicTrainConfig {
  /// Horizon in samples; T_s * k_bar must cover one period.
  int k_bar = 0;
  int eta = 16;
  /// Grid spacing of the extrema scan; <= 0 selects T_s / 10.
  double delta = 0.0;
  MeanSpec mean;
  OptimizerConfig optimizer;

  void validate(const LinearSystem1D& sys) const;
  double grid_spacing(const LinearSystem1D& sys) const {
    return delta > 0.0 ? delta : sys.sampling_time / 10.0;
  }
};

/// Guaranteed range of a function on an interval. The true minimum lies in
/// [lower, lower + slack] and the true maximum in [upper - slack, upper].
struct ExtremaBounds {
  double lower = 0.0;
  double upper = 0.0;
  double slack = 0.0;
};

ExtremaBounds certified_mean_extrema(const GPPosterior& posterior, double t_lo, double t_hi,
                                     double delta);
ExtremaBounds certified_derivative_extrema(const GPPosterior& posterior, double t_lo,
                                           double t_hi, double delta);

struct IntervalRecord {
  int index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  ExtremaBounds mean;
  /// Over [t_start, t_end + T_s]: a step starting inside the interval ends
  /// at most one sample period past it.
  ExtremaBounds derivative;
  bool has_tube = false;
  TubeGrowth tube;
  double violation = 0.0;
};

struct IntervalBounds {
  ExtremaBounds mean;
  std::vector<IntervalRecord> intervals;
  /// Every constraint holds including slack.
  bool certified = false;
  double certification_slack = 0.0;
  /// Max over state-box excess, per-interval tube excess (times T_s) and the
  /// horizon shortfall; state units.
  double violation = 0.0;
};

IntervalBounds evaluate_interval_bounds(const GPPosterior& posterior, const LinearSystem1D& sys,
                                        int k_bar, int eta, double delta);

struct PeriodicOutcome {
  TrainOutcome outcome;
  IntervalBounds bounds;
};

/// Periodic kernel, constant prior mean.
PeriodicOutcome train_periodic(const LinearSystem1D& sys, const Dataset& data,
                               const PeriodicTrainConfig& config);

/// Checks m+(t + period) = m+(t) on 10^3 times, then replays the sampled mean
/// over n_periods periods.
TrackabilityReport certify_periodic(const TrainOutcome& outcome, const LinearSystem1D& sys,
                                    const GPPosterior& posterior, int n_periods);

}  // namespace trackgp
