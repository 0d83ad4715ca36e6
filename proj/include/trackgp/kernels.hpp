#pragma once

// Prior mean and covariance families for scalar time inputs.
//
// Covariances are evaluated as functions of the signed lag d = t - t_i, and
// all derivatives are taken with respect to the second argument t.
//
//   squared exponential  k(d) = s1^2 exp(-d^2 / (2 s2^2))
//   periodic             k(d) = s1^2 exp(-(2 / s2^2) sin^2(pi d / p))
//                             = s1^2 exp((cos(w d) - 1) / s2^2),  w = 2 pi / p

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "trackgp/errors.hpp"

namespace trackgp {

enum class KernelFamily { SquaredExponential, Periodic };

struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
};

constexpr int parameter_count(KernelFamily family) {
  return family == KernelFamily::SquaredExponential ? 2 : 3;
}

inline std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::SquaredExponential ? "squared_exponential"
                                                    : "periodic";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "squared_exponential" || name == "se") {
    return KernelFamily::SquaredExponential;
  }
  if (name == "periodic") return KernelFamily::Periodic;
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

/// Kernel parameters (output scale, length scale, [period]) plus the
/// measurement noise variance added to the Gram diagonal.
template <typename Scalar>
struct BasicHyperparameters {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector values;
  Scalar noise_variance = Scalar(0);

  Scalar output_scale() const { return values(0); }
  Scalar length_scale() const { return values(1); }
  Scalar period() const { return values(2); }

  template <typename Other>
  BasicHyperparameters<Other> cast() const {
    return {values.template cast<Other>(), static_cast<Other>(noise_variance)};
  }
};

using Hyperparameters = BasicHyperparameters<double>;

template <typename Scalar>
void validate(const KernelSpec& spec, const BasicHyperparameters<Scalar>& theta) {
  const int expected = parameter_count(spec.family);
  if (theta.values.size() != expected) {
    throw ConfigError(std::string(to_string(spec.family)) + " kernel expects " +
                      std::to_string(expected) + " hyperparameters, got " +
                      std::to_string(theta.values.size()));
  }
  for (Eigen::Index i = 0; i < theta.values.size(); ++i) {
    using std::isfinite;
    if (!(theta.values(i) > Scalar(0)) || !isfinite(theta.values(i))) {
      throw ConfigError("hyperparameter " + std::to_string(i + 1) +
                        " must be finite and strictly positive");
    }
  }
  if (!(theta.noise_variance >= Scalar(0))) {
    throw ConfigError("noise variance must be non-negative");
  }
}

struct MeanSpec {
  double constant_value = 0.0;
};

inline double eval_mean(const MeanSpec& mean, double /*t*/) {
  return mean.constant_value;
}

namespace detail {

template <typename Scalar>
Scalar pi() {
  return static_cast<Scalar>(std::numbers::pi_v<long double>);
}

// Phase w*d reduced modulo one period before the trig call, so that lags
// differing by whole periods give bit-identical phases.
template <typename Scalar>
Scalar periodic_phase(Scalar lag, Scalar period) {
  using std::fmod;
  return Scalar(2) * pi<Scalar>() * fmod(lag, period) / period;
}

/// order-th derivative of the covariance with respect to t, as a function of
/// the lag d = t - t_i. No validation; callers validate once up front.
template <typename Scalar>
Scalar kernel_lag(const KernelSpec& spec, const BasicHyperparameters<Scalar>& theta,
                  Scalar d, int order = 0) {
  using std::cos;
  using std::exp;
  using std::sin;
  const Scalar s2 = theta.values(0) * theta.values(0);
  if (spec.family == KernelFamily::SquaredExponential) {
    const Scalar l2 = theta.values(1) * theta.values(1);
    const Scalar k = s2 * exp(-d * d / (Scalar(2) * l2));
    switch (order) {
      case 0: return k;
      case 1: return -d / l2 * k;
      case 2: return (d * d / (l2 * l2) - Scalar(1) / l2) * k;
      default: return (Scalar(3) * d / (l2 * l2) - d * d * d / (l2 * l2 * l2)) * k;
    }
  }
  const Scalar ell = theta.values(1) * theta.values(1);
  const Scalar period = theta.values(2);
  const Scalar w = Scalar(2) * pi<Scalar>() / period;
  const Scalar phi = periodic_phase(d, period);
  const Scalar c = cos(phi);
  const Scalar s = sin(phi);
  const Scalar k = s2 * exp((c - Scalar(1)) / ell);
  switch (order) {
    case 0: return k;
    case 1: return -(w / ell) * s * k;
    case 2: return w * w * (s * s / (ell * ell) - c / ell) * k;
    default:
      return w * w * w * s *
             (Scalar(1) / ell + Scalar(3) * c / (ell * ell) - s * s / (ell * ell * ell)) * k;
  }
}

}  // namespace detail

template <typename Scalar>
Scalar eval_kernel(const KernelSpec& spec, const BasicHyperparameters<Scalar>& theta,
                   Scalar t, Scalar t_prime) {
  validate(spec, theta);
  return detail::kernel_lag(spec, theta, t_prime - t, 0);
}

/// d/dt k(t_i, t).
template <typename Scalar>
Scalar eval_kernel_dt(const KernelSpec& spec, const BasicHyperparameters<Scalar>& theta,
                      Scalar t_i, Scalar t) {
  validate(spec, theta);
  return detail::kernel_lag(spec, theta, t - t_i, 1);
}

/// d^2/dt^2 k(t_i, t).
template <typename Scalar>
Scalar eval_kernel_dtt(const KernelSpec& spec, const BasicHyperparameters<Scalar>& theta,
                       Scalar t_i, Scalar t) {
  validate(spec, theta);
  return detail::kernel_lag(spec, theta, t - t_i, 2);
}

/// Lag beyond which |dk/dt| decreases strictly. Only defined for the squared
/// exponential, where it is the length scale.
template <typename Scalar>
Scalar monotonicity_threshold(const KernelSpec& spec,
                              const BasicHyperparameters<Scalar>& theta) {
  validate(spec, theta);
  if (spec.family != KernelFamily::SquaredExponential) {
    throw UnsupportedOperation(
        "monotonicity threshold is only defined for the squared exponential kernel");
  }
  return theta.values(1);
}

namespace detail {

// Calls fn(d) for every d = base + n*period inside [lo, hi].
template <typename Scalar, typename Fn>
void for_each_shift(Scalar base, Scalar period, Scalar lo, Scalar hi, Fn&& fn) {
  using std::ceil;
  using std::floor;
  const Scalar first = ceil((lo - base) / period);
  const Scalar last = floor((hi - base) / period);
  for (Scalar n = first; n <= last; n += Scalar(1)) fn(base + n * period);
}

}  // namespace detail

/// Upper bound on |d^order k / dt^order| over lags d in [lag_lo, lag_hi],
/// order in {1, 2, 3}. Exact (maximum over endpoints and interior critical
/// points) except for the periodic third derivative, which uses a product of
/// per-factor bounds.
template <typename Scalar>
Scalar kernel_derivative_abs_sup(const KernelSpec& spec,
                                 const BasicHyperparameters<Scalar>& theta, int order,
                                 Scalar lag_lo, Scalar lag_hi) {
  using std::abs;
  using std::acos;
  using std::cos;
  using std::exp;
  using std::max;
  using std::min;
  using std::sin;
  using std::sqrt;
  if (lag_lo > lag_hi) std::swap(lag_lo, lag_hi);
  Scalar best = max(abs(detail::kernel_lag(spec, theta, lag_lo, order)),
                    abs(detail::kernel_lag(spec, theta, lag_hi, order)));
  auto consider = [&](Scalar d) {
    if (d > lag_lo && d < lag_hi) {
      best = max(best, abs(detail::kernel_lag(spec, theta, d, order)));
    }
  };

  if (spec.family == KernelFamily::SquaredExponential) {
    const Scalar l = theta.values(1);
    if (order == 1) {
      consider(l);
      consider(-l);
    } else if (order == 2) {
      consider(Scalar(0));
      consider(sqrt(Scalar(3)) * l);
      consider(-sqrt(Scalar(3)) * l);
    } else {
      const Scalar r6 = sqrt(Scalar(6));
      for (Scalar u : {sqrt(Scalar(3) - r6), sqrt(Scalar(3) + r6)}) {
        consider(u * l);
        consider(-u * l);
      }
    }
    return best;
  }

  const Scalar ell = theta.values(1) * theta.values(1);
  const Scalar period = theta.values(2);
  const Scalar w = Scalar(2) * detail::pi<Scalar>() / period;
  // Critical points repeat with the period; one period of lags suffices.
  if (lag_hi - lag_lo > period) lag_hi = lag_lo + period;
  auto consider_phase = [&](Scalar phase) {
    detail::for_each_shift(phase / w, period, lag_lo, lag_hi, consider);
  };
  auto consider_cos = [&](Scalar c) {
    if (c < Scalar(-1) || c > Scalar(1)) return;
    consider_phase(acos(c));
    consider_phase(-acos(c));
  };

  if (order == 1) {
    consider_cos((-ell + sqrt(ell * ell + Scalar(4))) / Scalar(2));
    return best;
  }
  if (order == 2) {
    consider_phase(Scalar(0));
    consider_phase(detail::pi<Scalar>());
    const Scalar disc = sqrt(Scalar(5) * ell * ell + Scalar(4));
    consider_cos((-Scalar(3) * ell + disc) / Scalar(2));
    consider_cos((-Scalar(3) * ell - disc) / Scalar(2));
    return best;
  }

  // Third derivative: w^3 s1^2 |sin| * |q(cos)| * exp((cos - 1)/ell) with
  // q(c) = 1/ell + 3c/ell^2 - (1 - c^2)/ell^3, bounded factor by factor over
  // the ranges of sin and cos on the phase interval.
  const Scalar phi_lo = w * lag_lo;
  const Scalar phi_hi = w * lag_hi;
  Scalar c_min = min(cos(phi_lo), cos(phi_hi));
  Scalar c_max = max(cos(phi_lo), cos(phi_hi));
  Scalar s_abs = max(abs(sin(phi_lo)), abs(sin(phi_hi)));
  const Scalar pi = detail::pi<Scalar>();
  detail::for_each_shift(Scalar(0), Scalar(2) * pi, phi_lo, phi_hi,
                         [&](Scalar) { c_max = Scalar(1); });
  detail::for_each_shift(pi, Scalar(2) * pi, phi_lo, phi_hi,
                         [&](Scalar) { c_min = Scalar(-1); });
  detail::for_each_shift(pi / Scalar(2), pi, phi_lo, phi_hi,
                         [&](Scalar) { s_abs = Scalar(1); });
  auto q = [&](Scalar c) {
    return Scalar(1) / ell + Scalar(3) * c / (ell * ell) - (Scalar(1) - c * c) / (ell * ell * ell);
  };
  Scalar q_abs = max(abs(q(c_min)), abs(q(c_max)));
  const Scalar vertex = -Scalar(3) * ell / Scalar(2);
  if (vertex > c_min && vertex < c_max) q_abs = max(q_abs, abs(q(vertex)));
  const Scalar s1sq = theta.values(0) * theta.values(0);
  return max(best, w * w * w * s1sq * s_abs * q_abs * exp((c_max - Scalar(1)) / ell));
}

}  // namespace trackgp
