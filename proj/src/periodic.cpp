#include "trackgp/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trackgp/errors.hpp"

namespace trackgp {

namespace {

// On each grid cell of width h the function f (= m+ or its derivative)
// obeys two bounds: the Lipschitz one, min >= (f_a + f_b)/2 - L h/2, and the
// interpolation one, min >= min(f_a, f_b) - M h^2/8, with L and M bounding
// |f'| and |f''| on the cell. L and M come from exact suprema of the kernel
// derivatives over the cell's lags, weighted by |c_i|.
ExtremaBounds certified_extrema(const GPPosterior& p, int order, double t_lo, double t_hi,
                                double delta) {
  if (!(t_lo < t_hi)) throw DomainError("extrema interval needs t_lo < t_hi");
  if (!(delta > 0.0)) throw DomainError("grid spacing must be positive");
  const int cells = std::max(1, static_cast<int>(std::ceil((t_hi - t_lo) / delta - 1e-12)));
  const double h = (t_hi - t_lo) / cells;
  const auto& times = p.times();
  const auto& c = p.coefficients();
  const KernelSpec& spec = p.spec();
  const Hyperparameters& theta = p.hyperparameters();

  std::vector<double> f(static_cast<std::size_t>(cells) + 1);
  for (int j = 0; j <= cells; ++j) {
    const double t = j == cells ? t_hi : t_lo + j * h;
    f[static_cast<std::size_t>(j)] = order == 0 ? p.mean(t) : p.mean_dt(t);
  }

  ExtremaBounds out;
  out.lower = std::numeric_limits<double>::infinity();
  out.upper = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < cells; ++j) {
    const double a = t_lo + j * h;
    const double b = j + 1 == cells ? t_hi : a + h;
    double lip = 0.0;
    double curv = 0.0;
    for (Eigen::Index i = 0; i < times.size(); ++i) {
      const double w = std::abs(c(i));
      if (w == 0.0) continue;
      lip += w * kernel_derivative_abs_sup(spec, theta, order + 1, a - times(i), b - times(i));
      curv += w * kernel_derivative_abs_sup(spec, theta, order + 2, a - times(i), b - times(i));
    }
    const double fa = f[static_cast<std::size_t>(j)];
    const double fb = f[static_cast<std::size_t>(j) + 1];
    const double lo_node = std::min(fa, fb);
    const double hi_node = std::max(fa, fb);
    const double mid = 0.5 * (fa + fb);
    const double lower = std::max(mid - 0.5 * lip * h, lo_node - curv * h * h / 8.0);
    const double upper = std::min(mid + 0.5 * lip * h, hi_node + curv * h * h / 8.0);
    out.lower = std::min(out.lower, lower);
    out.upper = std::max(out.upper, upper);
    out.slack = std::max({out.slack, lo_node - lower, upper - hi_node});
  }
  return out;
}

}  // namespace

void PeriodicTrainConfig::validate(const LinearSystem1D& sys) const {
  if (k_bar < 1) throw ConfigError("k_bar must be >= 1");
  if (eta < 1) throw ConfigError("eta must be >= 1");
  if (!(grid_spacing(sys) > 0.0)) throw ConfigError("grid spacing must be positive");
}

ExtremaBounds certified_mean_extrema(const GPPosterior& posterior, double t_lo, double t_hi,
                                     double delta) {
  return certified_extrema(posterior, 0, t_lo, t_hi, delta);
}

ExtremaBounds certified_derivative_extrema(const GPPosterior& posterior, double t_lo,
                                           double t_hi, double delta) {
  return certified_extrema(posterior, 1, t_lo, t_hi, delta);
}

IntervalBounds evaluate_interval_bounds(const GPPosterior& posterior, const LinearSystem1D& sys,
                                        int k_bar, int eta, double delta) {
  const double ts = sys.sampling_time;
  const double span = ts * k_bar;
  IntervalBounds out;
  out.intervals.reserve(static_cast<std::size_t>(eta));
  out.mean.lower = std::numeric_limits<double>::infinity();
  out.mean.upper = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < eta; ++i) {
    IntervalRecord rec;
    rec.index = i;
    rec.t_start = span * i / eta;
    rec.t_end = span * (i + 1) / eta;
    rec.mean = certified_mean_extrema(posterior, rec.t_start, rec.t_end, delta);
    rec.derivative = certified_derivative_extrema(posterior, rec.t_start, rec.t_end + ts, delta);
    out.mean.lower = std::min(out.mean.lower, rec.mean.lower);
    out.mean.upper = std::max(out.mean.upper, rec.mean.upper);
    out.mean.slack = std::max(out.mean.slack, rec.mean.slack);
    out.certification_slack =
        std::max({out.certification_slack, rec.mean.slack, rec.derivative.slack});

    const Interval region = Interval{rec.mean.lower, rec.mean.upper}.intersect(sys.state_box);
    if (!region.empty()) {
      rec.has_tube = true;
      rec.tube = tube_growth_rates(sys, region);
      rec.violation = ts * std::max({0.0, rec.tube.lower_rate - rec.derivative.lower,
                                     rec.derivative.upper - rec.tube.upper_rate});
    }
    out.violation = std::max(out.violation, rec.violation);
    out.intervals.push_back(rec);
  }
  out.violation =
      std::max(out.violation, sys.state_box.excess(Interval{out.mean.lower, out.mean.upper}));
  const auto& theta = posterior.hyperparameters();
  if (posterior.spec().family == KernelFamily::Periodic && span < theta.period()) {
    out.violation = std::max(out.violation, theta.period() - span);
  }
  out.certified = out.violation <= 0.0;
  return out;
}

PeriodicOutcome train_periodic(const LinearSystem1D& sys, const Dataset& data,
                               const PeriodicTrainConfig& config) {
  sys.validate();
  config.validate(sys);
  const KernelSpec spec{KernelFamily::Periodic};
  const double delta = config.grid_spacing(sys);
  const LinearSystem1D tight = sys.tightened(config.optimizer.constraint_tolerance);
  const int k_bar = config.k_bar;
  const int eta = config.eta;

  ViolationModel model;
  model.penalty = [tight, k_bar, eta, delta](const GPPosterior& p) {
    return evaluate_interval_bounds(p, tight, k_bar, eta, delta).violation;
  };
  model.report = [sys, k_bar, eta, delta](const GPPosterior& p) {
    return evaluate_interval_bounds(p, sys, k_bar, eta, delta).violation;
  };
  PeriodicOutcome out;
  out.outcome = penalized_minimize(spec, config.mean, data, config.optimizer, model);
  const GPPosterior posterior(spec, config.mean, out.outcome.theta, data);
  out.bounds = evaluate_interval_bounds(posterior, sys, k_bar, eta, delta);
  return out;
}

TrackabilityReport certify_periodic(const TrainOutcome& outcome, const LinearSystem1D& sys,
                                    const GPPosterior& posterior, int n_periods) {
  if (posterior.spec().family != KernelFamily::Periodic) {
    throw PreconditionViolation("periodic certification needs a periodic kernel");
  }
  if (posterior.hyperparameters().values != outcome.theta.values) {
    throw PreconditionViolation("posterior was not built from the outcome's hyperparameters");
  }
  if (n_periods < 1) throw DomainError("n_periods must be >= 1");
  const double period = outcome.theta.period();
  constexpr int kSamples = 1000;
  for (int s = 0; s < kSamples; ++s) {
    const double t = period * n_periods * s / kSamples;
    const double m0 = posterior.mean(t);
    const double m1 = posterior.mean(t + period);
    if (std::abs(m1 - m0) > 1e-9 * std::max(1.0, std::abs(m0))) {
      std::ostringstream msg;
      msg << "posterior mean is not periodic at t=" << t << " (" << m0 << " vs " << m1 << ")";
      throw NumericalError(msg.str());
    }
  }
  const int steps = static_cast<int>(std::ceil(n_periods * period / sys.sampling_time));
  return check_trackable(sys, sample_reference(posterior, sys.sampling_time, steps));
}

}  // namespace trackgp
