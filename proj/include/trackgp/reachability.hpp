#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace trackgp {

/// Closed interval [lo, hi]; empty when lo > hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool empty() const { return lo > hi; }
  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  bool contains(const Interval& other, double tol = 0.0) const {
    return other.lo >= lo - tol && other.hi <= hi + tol;
  }
  /// Distance from x to the interval (0 inside).
  double distance(double x) const;
  /// Largest distance of any point of `other` from this interval.
  double excess(const Interval& other) const;
  Interval shrunk(double margin) const { return {lo + margin, hi - margin}; }
  Interval intersect(const Interval& other) const;
  Interval hull(const Interval& other) const;
};

/// x(k+1) = a x(k) + b u(k) with box constraints on x and u.
struct LinearSystem1D {
  double a = 1.0;
  double b = 1.0;
  Interval state_box{-1.0, 1.0};
  Interval input_box{-1.0, 1.0};
  double sampling_time = 1.0;

  /// Throws ConfigError on x_lo >= x_hi, u_lo >= u_hi, b == 0 or T_s <= 0.
  void validate() const;
  double step(double x, double u) const { return a * x + b * u; }
  /// {b u : u in U}.
  Interval input_effect() const;
  /// Same system with X shrunk by `margin` and U by margin/|b|, so that any
  /// state within `margin` of the tightened reachable set is truly reachable.
  LinearSystem1D tightened(double margin) const;
};

Interval one_step_reachable(const LinearSystem1D& sys, double x);

/// Signed per-time growth rates of an inner approximation of the one-step
/// tube: [x + lower_rate T_s, x + upper_rate T_s] is reachable from every
/// x in `domain`.
struct TubeGrowth {
  double lower_rate = 0.0;
  double upper_rate = 0.0;
  Interval domain;

  bool nonempty() const { return lower_rate <= upper_rate; }
  bool admits_constant() const { return lower_rate <= 0.0 && 0.0 <= upper_rate; }
  bool contains_rates(const Interval& rates, double tol = 0.0) const {
    return rates.lo >= lower_rate - tol && rates.hi <= upper_rate + tol;
  }
};

/// Rates over `domain`; throws DomainError unless domain is inside X.
TubeGrowth tube_growth_bounds(const LinearSystem1D& sys, const Interval& domain);

/// Same formula without the domain check, for diagnostics on candidate
/// regions that may leave X.
TubeGrowth tube_growth_rates(const LinearSystem1D& sys, const Interval& domain);

enum class ViolationKind { StateConstraint, NoAdmissibleInput };

std::string_view to_string(ViolationKind kind);

struct TrackabilityReport {
  bool trackable = true;
  std::optional<std::size_t> first_violation_index;
  std::optional<ViolationKind> violation_kind;
  std::vector<double> reference_inputs;
};

inline constexpr double kBoxTolerance = 1e-9;

/// Replays a sampled reference against the dynamics: the inputs
/// u_r(k) = (x_r(k+1) - a x_r(k)) / b must lie in U and every x_r(k) in X.
TrackabilityReport check_trackable(const LinearSystem1D& sys, std::span<const double> reference);

/// Largest distance of the reference outside X, or (for k >= 1) outside the
/// one-step reachable set of its predecessor. 0 iff trackable on the samples.
double reference_violation(const LinearSystem1D& sys, std::span<const double> reference);

}  // namespace trackgp
