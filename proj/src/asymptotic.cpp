#include "trackgp/asymptotic.hpp"

#include <cmath>
#include <sstream>

namespace trackgp {

void AsymptoticTrainConfig::validate() const {
  if (k_init < 1) throw ConfigError("k_init must be >= 1");
  if (k_max < k_init) throw ConfigError("k_max must be >= k_init");
  if (k_stride < 1) throw ConfigError("k_stride must be >= 1");
}

AsymptoticIteration evaluate_termination(const LinearSystem1D& sys, const GPPosterior& posterior,
                                         int k_bar, bool skip_derivative_check) {
  AsymptoticIteration it;
  it.k_bar = k_bar;
  it.theta = posterior.hyperparameters();
  it.nlml = posterior.nlml();
  const double t_bar = sys.sampling_time * k_bar;
  const double zeta = monotonicity_threshold(posterior.spec(), posterior.hyperparameters());

  it.lag_check = true;
  for (Eigen::Index i = 0; i < posterior.times().size(); ++i) {
    if (!(std::abs(posterior.times()(i) - t_bar) > zeta)) it.lag_check = false;
  }
  it.mean = posterior.mean(t_bar);
  it.mean_bound = posterior.mean_bound(t_bar);
  it.derivative = posterior.mean_dt(t_bar);
  it.derivative_bound = posterior.mean_dt_bound(t_bar);
  if (!it.lag_check) return it;

  // Later samples stay within mean_bound(t_bar) of the prior mean; the
  // hull with the interval around m+(t_bar) also covers the printed check.
  const double prior = posterior.prior_mean();
  const Interval around_prior{prior - it.mean_bound, prior + it.mean_bound};
  const Interval around_mean{it.mean - it.mean_bound, it.mean + it.mean_bound};
  const Interval region = around_prior.hull(around_mean);
  it.tube = tube_growth_rates(sys, region);
  it.tube_nonempty = it.tube->nonempty();
  it.state_check = sys.state_box.contains(region);
  // Evaluated even when the state check fails so the trace shows when each
  // condition first holds.
  it.derivative_check =
      skip_derivative_check ||
      it.tube->contains_rates(Interval{-it.derivative_bound, it.derivative_bound});
  return it;
}

AsymptoticCertificate train_asymptotic(const LinearSystem1D& sys, const Dataset& data,
                                       const AsymptoticTrainConfig& config) {
  sys.validate();
  config.validate();
  const KernelSpec spec{KernelFamily::SquaredExponential};
  const double horizon_start = sys.sampling_time * config.k_init;
  if (data.times().maxCoeff() >= horizon_start) {
    std::ostringstream msg;
    msg << "training data must end before T_s * k_init = " << horizon_start;
    throw DomainError(msg.str());
  }
  // Tightened by the tolerance so that feasible fits satisfy the original
  // constraints exactly; the same margin applies to the envelope checks.
  const LinearSystem1D tight = sys.tightened(config.optimizer.constraint_tolerance);

  std::vector<AsymptoticIteration> trace;
  OptimizerConfig opt = config.optimizer;
  for (int k_bar = config.k_init; k_bar <= config.k_max; k_bar += config.k_stride) {
    const TrainOutcome outcome =
        minimize_nlml_constrained(spec, config.mean, data, ConstraintSet{k_bar, sys}, opt);
    if (!outcome.feasible) {
      std::ostringstream msg;
      msg << "constrained fit infeasible at k_bar = " << k_bar
          << " (violation " << outcome.max_violation << ")";
      throw InfeasibleError(msg.str(), k_bar, outcome, trace);
    }
    const GPPosterior posterior(spec, config.mean, outcome.theta, data);
    AsymptoticIteration it =
        evaluate_termination(tight, posterior, k_bar, config.skip_derivative_check);
    it.feasible = true;
    trace.push_back(it);

    if (it.lag_check && it.state_check && it.derivative_check) {
      AsymptoticCertificate cert;
      cert.k_final = k_bar;
      cert.outcome = outcome;
      cert.theta = outcome.theta;
      cert.nlml = outcome.nlml_value;
      cert.mean_at_k = it.mean;
      cert.mean_bound_at_k = it.mean_bound;
      cert.derivative_bound_at_k = it.derivative_bound;
      cert.tube = *it.tube;
      cert.lag_check = it.lag_check;
      cert.state_check = it.state_check;
      cert.derivative_check = it.derivative_check;
      cert.trace = std::move(trace);
      return cert;
    }

    opt.warm_starts = {outcome.theta.values};
    if (config.followup_multistart >= 0) opt.multistart_count = config.followup_multistart;
    opt.rng_seed = config.optimizer.rng_seed + static_cast<std::uint64_t>(k_bar);
  }
  std::ostringstream msg;
  msg << "no certificate up to k_max = " << config.k_max;
  throw NonTerminationError(msg.str(), std::move(trace));
}

TrackabilityReport certify_all_time(const AsymptoticCertificate& certificate,
                                    const LinearSystem1D& sys, const GPPosterior& posterior,
                                    int horizon_steps) {
  if (posterior.hyperparameters().values != certificate.theta.values) {
    throw PreconditionViolation("posterior was not built from the certified hyperparameters");
  }
  return check_trackable(sys, sample_reference(posterior, sys.sampling_time, horizon_steps));
}

}  // namespace trackgp
