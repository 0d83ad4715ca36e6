#include "trackgp/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trackgp/errors.hpp"

namespace trackgp {

double Interval::distance(double x) const {
  if (x < lo) return lo - x;
  if (x > hi) return x - hi;
  return 0.0;
}

double Interval::excess(const Interval& other) const {
  return std::max({0.0, lo - other.lo, other.hi - hi});
}

Interval Interval::intersect(const Interval& other) const {
  return {std::max(lo, other.lo), std::min(hi, other.hi)};
}

Interval Interval::hull(const Interval& other) const {
  return {std::min(lo, other.lo), std::max(hi, other.hi)};
}

void LinearSystem1D::validate() const {
  if (!(state_box.lo < state_box.hi)) throw ConfigError("state box requires x_lo < x_hi");
  if (!(input_box.lo < input_box.hi)) throw ConfigError("input box requires u_lo < u_hi");
  if (b == 0.0) throw ConfigError("input coefficient b must be nonzero");
  if (!(sampling_time > 0.0)) throw ConfigError("sampling time must be positive");
  if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("system coefficients must be finite");
}

Interval LinearSystem1D::input_effect() const {
  const double e0 = b * input_box.lo;
  const double e1 = b * input_box.hi;
  return {std::min(e0, e1), std::max(e0, e1)};
}

LinearSystem1D LinearSystem1D::tightened(double margin) const {
  LinearSystem1D out = *this;
  out.state_box = state_box.shrunk(margin);
  out.input_box = input_box.shrunk(margin / std::abs(b));
  return out;
}

Interval one_step_reachable(const LinearSystem1D& sys, double x) {
  const Interval effect = sys.input_effect();
  return {sys.a * x + effect.lo, sys.a * x + effect.hi};
}

TubeGrowth tube_growth_rates(const LinearSystem1D& sys, const Interval& domain) {
  // (a - 1) x + b u is affine in x, so its extrema over the domain sit at
  // the endpoints.
  const Interval effect = sys.input_effect();
  const double drift_lo = (sys.a - 1.0) * domain.lo;
  const double drift_hi = (sys.a - 1.0) * domain.hi;
  TubeGrowth g;
  g.lower_rate = (std::max(drift_lo, drift_hi) + effect.lo) / sys.sampling_time;
  g.upper_rate = (std::min(drift_lo, drift_hi) + effect.hi) / sys.sampling_time;
  g.domain = domain;
  return g;
}

TubeGrowth tube_growth_bounds(const LinearSystem1D& sys, const Interval& domain) {
  if (domain.empty() || !sys.state_box.contains(domain, kBoxTolerance)) {
    std::ostringstream msg;
    msg << "tube domain [" << domain.lo << ", " << domain.hi << "] is not inside X = ["
        << sys.state_box.lo << ", " << sys.state_box.hi << "]";
    throw DomainError(msg.str());
  }
  return tube_growth_rates(sys, domain);
}

std::string_view to_string(ViolationKind kind) {
  return kind == ViolationKind::StateConstraint ? "state_constraint" : "no_admissible_input";
}

TrackabilityReport check_trackable(const LinearSystem1D& sys, std::span<const double> reference) {
  if (reference.size() < 2) throw DomainError("trackability check needs at least two samples");
  TrackabilityReport report;
  report.reference_inputs.reserve(reference.size() - 1);
  for (std::size_t k = 0; k + 1 < reference.size(); ++k) {
    report.reference_inputs.push_back((reference[k + 1] - sys.a * reference[k]) / sys.b);
  }
  auto flag = [&](std::size_t k, ViolationKind kind) {
    if (!report.trackable) return;
    report.trackable = false;
    report.first_violation_index = k;
    report.violation_kind = kind;
  };
  for (std::size_t k = 0; k < reference.size() && report.trackable; ++k) {
    if (!sys.state_box.contains(reference[k], kBoxTolerance)) {
      flag(k, ViolationKind::StateConstraint);
    } else if (k + 1 < reference.size() &&
               !sys.input_box.contains(report.reference_inputs[k], kBoxTolerance)) {
      flag(k, ViolationKind::NoAdmissibleInput);
    }
  }
  return report;
}

double reference_violation(const LinearSystem1D& sys, std::span<const double> reference) {
  double worst = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    worst = std::max(worst, sys.state_box.distance(reference[k]));
    if (k > 0) {
      worst = std::max(worst, one_step_reachable(sys, reference[k - 1]).distance(reference[k]));
    }
  }
  return worst;
}

}  // namespace trackgp
