#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "random_problems.hpp"
#include "trackgp/gp.hpp"

using namespace trackgp;

namespace {

const KernelSpec kSE{KernelFamily::SquaredExponential};

Hyperparameters se(double s, double l, double noise = 0.0) { return {Eigen::Vector2d(s, l), noise}; }

Dataset points(std::vector<Observation> obs) { return Dataset::from_points(std::move(obs)); }

const double kLn2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

TEST_CASE("dataset ingestion") {
  const Dataset d = points({{2.0, 1.0}, {0.0, 3.0}, {1.0, 2.0}});
  CHECK(d.size() == 3);
  CHECK(d.times()(0) == 0.0);
  CHECK(d.values()(0) == 3.0);
  CHECK(d.times()(2) == 2.0);
  CHECK_THROWS_AS(points({}), DomainError);
  CHECK_THROWS_AS(points({{-1.0, 0.0}}), DomainError);
  CHECK_THROWS_AS(points({{1.0, 0.0}, {1.0, 2.0}}), DomainError);
  CHECK_THROWS_AS(points({{1.0, NAN}}), DomainError);
  CHECK(Dataset::from_points({{0, 0}}, DatasetRole::PredictionTraining).role() == DatasetRole::PredictionTraining);
}

TEST_CASE("coefficients of a single point") {
  const auto p0 = build_posterior(kSE, {}, se(1, 1, 0.0), points({{0, 2}}));
  CHECK(p0.coefficients()(0) == doctest::Approx(2.0).epsilon(1e-15));
  const auto p1 = build_posterior(kSE, {}, se(1, 1, 1.0), points({{0, 2}}));
  CHECK(p1.coefficients()(0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("single point mean, derivative and bounds") {
  const auto p = build_posterior(kSE, {}, se(1, 1), points({{0, 2}}));
  const double e = 2.0 * std::exp(-0.5);
  CHECK(posterior_mean(p, 1.0) == doctest::Approx(e).epsilon(1e-14));
  CHECK(posterior_mean_dt(p, 1.0) == doctest::Approx(-e).epsilon(1e-14));
  CHECK(mean_bound(p, 1.0) == doctest::Approx(e).epsilon(1e-14));
  CHECK(mean_dt_bound(p, 1.0) == doctest::Approx(e).epsilon(1e-14));
  CHECK(mean_dt_bound(p, 0.0) == 0.0);
  const auto neg = build_posterior(kSE, {}, se(1, 1), points({{0, -2}}));
  CHECK(mean_bound(neg, 1.0) == doctest::Approx(e).epsilon(1e-14));
  const auto rec = p.predict(1.0);
  CHECK(rec.t == 1.0);
  CHECK(rec.mean == posterior_mean(p, 1.0));
  CHECK(rec.mean_bound == mean_bound(p, 1.0));
  CHECK(rec.derivative_bound == mean_dt_bound(p, 1.0));
  CHECK(rec.variance == posterior_variance(p, 1.0));
}

TEST_CASE("interpolation and reversion to the prior") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto prob = gen::problem(rng, 6, true);
    prob.noise = 0.0;
    const auto p = gen::posterior_of(prob);
    for (std::size_t i = 0; i < prob.t.size(); ++i) {
      CHECK(std::abs(p.mean(prob.t[i]) - prob.y[i]) <= 1e-8);
      CHECK(p.variance(prob.t[i]) <= 1e-8);
    }
  }
  const auto p = build_posterior(kSE, MeanSpec{0.7}, se(1.5, 0.5, 0.01), points({{0, 1}, {1, -1}}));
  CHECK(p.mean(1e3) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(p.variance(1e3) == doctest::Approx(2.25).epsilon(1e-14));
  CHECK(std::abs(p.mean_dt(1e3)) <= 1e-8);
}

TEST_CASE("symmetric data has zero slope at the centre") {
  // Dataset times must be non-negative, so the pair sits at 0 and 2.
  const auto p = build_posterior(kSE, {}, se(1, 1), points({{0, 1}, {2, 1}}));
  CHECK(std::abs(p.mean_dt(1.0)) <= 1e-15);
}

TEST_CASE("nlml examples") {
  CHECK(nlml(kSE, {}, se(1, 1), points({{0, 0}})) == doctest::Approx(kLn2Pi).epsilon(1e-14));
  CHECK(nlml(kSE, {}, se(1, 1), points({{0, 1}})) == doctest::Approx(1.0 + kLn2Pi).epsilon(1e-14));
  // Nonzero prior mean is subtracted from the targets.
  CHECK(nlml(kSE, MeanSpec{1.0}, se(1, 1), points({{0, 1}})) == doctest::Approx(kLn2Pi).epsilon(1e-14));
}

TEST_CASE("oracle agreement on random problems") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const auto prob = gen::problem(rng, 6, true);
    const auto p = gen::posterior_of(prob);
    CHECK(std::abs(p.nlml() - static_cast<double>(oracle::nlml(prob))) <= 1e-9);
    const auto c = oracle::coefficients(prob);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      CHECK(std::abs(p.coefficients()(i) - static_cast<double>(c(i))) <= 1e-10 * std::max(1.0, std::abs(static_cast<double>(c(i)))));
    }
    CHECK(p.solve_residual() <= 1e-10);
    for (int q = 0; q < 5; ++q) {
      const double ts = gen::uniform(rng, -1, 7);
      const auto o = oracle::predict(prob, ts);
      CHECK(std::abs(p.mean(ts) - static_cast<double>(o.mean)) <= 1e-9);
      CHECK(std::abs(p.variance(ts) - static_cast<double>(o.variance)) <= 1e-9);
    }
  }
}

TEST_CASE("weighted-sum form equals the matrix form") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto prob = gen::problem(rng, 6, true);
    const auto p = gen::posterior_of(prob);
    const double ts = gen::uniform(rng, 0, 5);
    // Matrix form in double precision with the library's own kernel.
    const auto n = static_cast<Eigen::Index>(prob.t.size());
    Eigen::MatrixXd k(n, n);
    Eigen::VectorXd cross(n), r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        k(i, j) = eval_kernel(p.spec(), p.hyperparameters(), prob.t[i], prob.t[j]) + (i == j ? prob.noise : 0.0);
      }
      cross(i) = eval_kernel(p.spec(), p.hyperparameters(), ts, prob.t[i]);
      r(i) = prob.y[i] - prob.prior;
    }
    const double matrix_form = prob.prior + cross.dot(k.ldlt().solve(r));
    CHECK(std::abs(p.mean(ts) - matrix_form) <= 1e-12 * std::max(1.0, k.norm() * r.norm()));
  }
}

TEST_CASE("property: bounds dominate, variance in range, derivative matches differences") {
  std::mt19937_64 rng(24);
  int fd_checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto prob = gen::problem(rng, 8, true);
    const auto p = gen::posterior_of(prob);
    const double s2 = prob.theta[0] * prob.theta[0];
    for (int q = 0; q < 200; ++q) {
      const double ts = gen::uniform(rng, 0, 10);
      CHECK(p.mean_bound(ts) >= std::abs(p.mean(ts) - prob.prior));
      CHECK(p.mean_dt_bound(ts) >= std::abs(p.mean_dt(ts)));
      const double v = p.variance(ts);
      CHECK(v >= 0.0);
      CHECK(v <= s2 * (1 + 1e-12));
      const double h = 1e-5;
      const double fd = (p.mean(ts + h) - p.mean(ts - h)) / (2 * h);
      const double d = p.mean_dt(ts);
      if (std::abs(d) > 1e-2) {
        CHECK(std::abs(d - fd) / std::abs(d) <= 1e-6);
        ++fd_checked;
      }
    }
  }
  CHECK(fd_checked > 1000);
}

TEST_CASE("squared exponential derivative envelope decreases away from the data") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 50; ++trial) {
    const auto prob = gen::problem(rng, 6, false);
    const auto p = gen::posterior_of(prob);
    const double start = prob.t.back() + prob.theta[1];
    double prev = p.mean_dt_bound(start);
    for (int j = 1; j <= 200; ++j) {
      const double cur = p.mean_dt_bound(start + 0.05 * j);
      CHECK(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(build_posterior(kSE, {}, se(1, 1), Dataset{}), DomainError);
  CHECK_THROWS_AS(build_posterior(kSE, {}, se(-1, 1), points({{0, 0}})), ConfigError);
  // Two identical-looking points 1e-14 apart without noise: singular even after jitter? The
  // jitter rescues it, and the jitter is reported.
  const auto p = build_posterior(kSE, {}, se(1, 10), points({{0, 1}, {1e-9, 1}}));
  CHECK(p.jitter() > 0.0);
  CHECK(std::isfinite(p.mean(0.5)));
}
