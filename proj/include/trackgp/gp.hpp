#pragma once

// Scalar-input GP posterior built from one Cholesky factorization of the
// regularized Gram matrix K(t,t) + sigma_n^2 I. The posterior mean is kept in
// weighted-sum form m(t*) + sum_i c_i k(t_i, t*) so that the derivative and
// the triangle-inequality envelopes come from the same coefficients.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trackgp/errors.hpp"
#include "trackgp/kernels.hpp"

namespace trackgp {

enum class DatasetRole { HyperparameterTraining, PredictionTraining };

struct Observation {
  double t = 0.0;
  double y = 0.0;
};

/// Time-sorted observations with strictly increasing, non-negative times.
class Dataset {
 public:
  Dataset() = default;

  static Dataset from_points(std::vector<Observation> points,
                             DatasetRole role = DatasetRole::HyperparameterTraining) {
    if (points.empty()) throw DomainError("dataset must not be empty");
    for (const auto& p : points) {
      if (!std::isfinite(p.t) || !std::isfinite(p.y)) {
        throw DomainError("dataset contains a non-finite value");
      }
      if (p.t < 0.0) throw DomainError("dataset times must be non-negative");
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const Observation& a, const Observation& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (points[i].t == points[i - 1].t) {
        std::ostringstream msg;
        msg << "duplicate time " << points[i].t << " in dataset";
        throw DomainError(msg.str());
      }
    }
    Dataset d;
    d.role_ = role;
    d.times_.resize(static_cast<Eigen::Index>(points.size()));
    d.values_.resize(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
      d.times_(static_cast<Eigen::Index>(i)) = points[i].t;
      d.values_(static_cast<Eigen::Index>(i)) = points[i].y;
    }
    return d;
  }

  const Eigen::VectorXd& times() const { return times_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return times_.size(); }
  DatasetRole role() const { return role_; }

 private:
  Eigen::VectorXd times_;
  Eigen::VectorXd values_;
  DatasetRole role_ = DatasetRole::HyperparameterTraining;
};

struct PredictionRecord {
  double t = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double mean_bound = 0.0;
  double derivative_bound = 0.0;
};

template <typename Scalar>
class BasicPosterior {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Params = BasicHyperparameters<Scalar>;

  BasicPosterior(KernelSpec spec, MeanSpec mean, Params theta, const Dataset& data)
      : spec_(spec), mean_(mean), theta_(std::move(theta)) {
    validate(spec_, theta_);
    if (data.size() == 0) throw DomainError("cannot condition on an empty dataset");
    times_ = data.times().template cast<Scalar>();
    const Eigen::Index n = times_.size();
    const Scalar prior = static_cast<Scalar>(mean_.constant_value);
    centered_ = data.values().template cast<Scalar>().array() - prior;

    Matrix gram(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j; i < n; ++i) {
        const Scalar k = detail::kernel_lag(spec_, theta_, times_(i) - times_(j));
        gram(i, j) = k;
        gram(j, i) = k;
      }
    }
    gram.diagonal().array() += theta_.noise_variance;

    llt_.compute(gram);
    if (llt_.info() != Eigen::Success) {
      jitter_ = Scalar(1e-10) * theta_.values(0) * theta_.values(0);
      gram.diagonal().array() += jitter_;
      llt_.compute(gram);
      if (llt_.info() != Eigen::Success) {
        Eigen::LDLT<Matrix> ldlt(gram);
        std::ostringstream msg;
        msg << "Gram matrix is not positive definite (smallest pivot "
            << static_cast<double>(ldlt.vectorD().minCoeff()) << ")";
        throw NumericalError(msg.str());
      }
    }
    coefficients_ = llt_.solve(centered_);
  }

  const KernelSpec& spec() const { return spec_; }
  const MeanSpec& prior() const { return mean_; }
  const Params& hyperparameters() const { return theta_; }
  const Vector& times() const { return times_; }
  const Vector& coefficients() const { return coefficients_; }
  /// Diagonal shift applied after a failed first factorization (0 if none).
  Scalar jitter() const { return jitter_; }

  Scalar prior_mean() const { return static_cast<Scalar>(mean_.constant_value); }

  Scalar mean(Scalar t) const { return prior_mean() + weighted_sum(t, 0, false); }
  Scalar mean_dt(Scalar t) const { return weighted_sum(t, 1, false); }
  Scalar mean_dtt(Scalar t) const { return weighted_sum(t, 2, false); }
  /// Padded by the rounding of prior + sum so that it also dominates the
  /// deviation of the computed mean from the prior.
  Scalar mean_bound(Scalar t) const {
    using std::abs;
    const Scalar acc = weighted_sum(t, 0, true);
    return acc + Scalar(4) * std::numeric_limits<Scalar>::epsilon() * (abs(prior_mean()) + acc);
  }
  Scalar mean_dt_bound(Scalar t) const { return weighted_sum(t, 1, true); }

  Scalar variance(Scalar t) const {
    const Eigen::Index n = times_.size();
    Vector cross(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      cross(i) = detail::kernel_lag(spec_, theta_, t - times_(i));
    }
    const Scalar prior_var = detail::kernel_lag(spec_, theta_, Scalar(0));
    const Vector v = llt_.matrixL().solve(cross);
    const Scalar var = prior_var - v.squaredNorm();
    if (var < Scalar(0)) {
      using std::max;
      if (var > -Scalar(1e-10) * max(Scalar(1), prior_var)) return Scalar(0);
      std::ostringstream msg;
      msg << "posterior variance " << static_cast<double>(var) << " is negative at t="
          << static_cast<double>(t);
      throw NumericalError(msg.str());
    }
    return var;
  }

  /// ln|K + s^2 I| from the Cholesky diagonal.
  Scalar log_determinant() const {
    using std::log;
    Scalar acc(0);
    const auto& l = llt_.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) acc += log(l(i, i));
    return Scalar(2) * acc;
  }

  /// ln|K| + y^T K^{-1} y + n ln(2 pi), y centered on the prior mean.
  Scalar nlml() const {
    using std::log;
    const Scalar n = static_cast<Scalar>(times_.size());
    return log_determinant() + centered_.dot(coefficients_) +
           n * log(Scalar(2) * detail::pi<Scalar>());
  }

  /// Relative residual of (K + s^2 I) c = y - m.
  Scalar solve_residual() const {
    const Eigen::Index n = times_.size();
    Vector r = -centered_;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        r(i) += detail::kernel_lag(spec_, theta_, times_(i) - times_(j)) * coefficients_(j);
      }
      r(i) += (theta_.noise_variance + jitter_) * coefficients_(i);
    }
    const Scalar scale = centered_.norm();
    return scale > Scalar(0) ? r.norm() / scale : r.norm();
  }

  PredictionRecord predict(double t) const {
    const Scalar ts = static_cast<Scalar>(t);
    return {t, static_cast<double>(mean(ts)), static_cast<double>(variance(ts)),
            static_cast<double>(mean_bound(ts)), static_cast<double>(mean_dt_bound(ts))};
  }

 private:
  Scalar weighted_sum(Scalar t, int order, bool absolute) const {
    using std::abs;
    Scalar acc(0);
    for (Eigen::Index i = 0; i < times_.size(); ++i) {
      const Scalar k = detail::kernel_lag(spec_, theta_, t - times_(i), order);
      acc += absolute ? abs(coefficients_(i)) * abs(k) : coefficients_(i) * k;
    }
    return acc;
  }

  KernelSpec spec_;
  MeanSpec mean_;
  Params theta_;
  Vector times_;
  Vector centered_;
  Vector coefficients_;
  Eigen::LLT<Matrix> llt_;
  Scalar jitter_ = Scalar(0);
};

using GPPosterior = BasicPosterior<double>;

inline GPPosterior build_posterior(const KernelSpec& spec, const MeanSpec& mean,
                                   const Hyperparameters& theta, const Dataset& data) {
  return GPPosterior(spec, mean, theta, data);
}

template <typename Scalar>
Scalar posterior_mean(const BasicPosterior<Scalar>& p, Scalar t) {
  return p.mean(t);
}
template <typename Scalar>
Scalar posterior_variance(const BasicPosterior<Scalar>& p, Scalar t) {
  return p.variance(t);
}
template <typename Scalar>
Scalar posterior_mean_dt(const BasicPosterior<Scalar>& p, Scalar t) {
  return p.mean_dt(t);
}
template <typename Scalar>
Scalar mean_bound(const BasicPosterior<Scalar>& p, Scalar t) {
  return p.mean_bound(t);
}
template <typename Scalar>
Scalar mean_dt_bound(const BasicPosterior<Scalar>& p, Scalar t) {
  return p.mean_dt_bound(t);
}

/// Posterior mean sampled at each time in `times`.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> posterior_mean(const BasicPosterior<Scalar>& p,
                                                        const Eigen::MatrixBase<Derived>& times) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(times.size());
  for (Eigen::Index j = 0; j < times.size(); ++j) out(j) = p.mean(times(j));
  return out;
}

inline double nlml(const KernelSpec& spec, const MeanSpec& mean, const Hyperparameters& theta,
                   const Dataset& data) {
  return build_posterior(spec, mean, theta, data).nlml();
}

}  // namespace trackgp
