#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "random_problems.hpp"
#include "trackgp/periodic.hpp"

using namespace trackgp;

namespace {

const KernelSpec kSE{KernelFamily::SquaredExponential};
const KernelSpec kPer{KernelFamily::Periodic};

struct Scan {
  double min = 1e300;
  double max = -1e300;
};

Scan dense_scan(const GPPosterior& p, int order, double lo, double hi, int points) {
  Scan s;
  for (int j = 0; j <= points; ++j) {
    const double t = lo + (hi - lo) * j / points;
    const double v = order == 0 ? p.mean(t) : p.mean_dt(t);
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  return s;
}

// True extremum inside the reported bracket, with room for rounding only.
void check_bracket(const ExtremaBounds& b, const Scan& s) {
  const double eps = 1e-12 * std::max(1.0, std::max(std::abs(s.min), std::abs(s.max)));
  CHECK(s.min >= b.lower - eps);
  CHECK(s.min <= b.lower + b.slack + eps);
  CHECK(s.max <= b.upper + eps);
  CHECK(s.max >= b.upper - b.slack - eps);
}

LinearSystem1D example2() { return {0.9, 0.1, {-2, 2}, {-3, 1.4}, 0.1}; }

Dataset example2_data() {
  std::vector<Observation> obs;
  for (int i = 0; i < 30; ++i) {
    const double t = 2 * std::numbers::pi * i / 30;
    obs.push_back({t, std::sin(2 * t) + 0.5 * std::sin(4 * t + 1)});
  }
  return Dataset::from_points(obs);
}

}  // namespace

TEST_CASE("mean extrema of a single squared exponential bump") {
  const GPPosterior p(kSE, {}, {Eigen::Vector2d(1, 1), 0.0}, Dataset::from_points({{0, 2}}));
  const auto b = certified_mean_extrema(p, 0.0, 1.0, 1e-3);
  check_bracket(b, {2 * std::exp(-0.5), 2.0});
  CHECK(b.slack < 1e-6);
}

TEST_CASE("constant posterior has exact extrema") {
  const GPPosterior p(kSE, MeanSpec{0.3}, {Eigen::Vector2d(1, 1), 0.0}, Dataset::from_points({{0, 0.3}}));
  const auto b = certified_mean_extrema(p, 0.0, 5.0, 0.1);
  CHECK(b.lower == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(b.upper == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(b.slack == 0.0);
  const auto d = certified_derivative_extrema(p, 0.0, 5.0, 0.1);
  CHECK(d.lower == 0.0);
  CHECK(d.upper == 0.0);
}

TEST_CASE("derivative extrema of symmetric data are symmetric") {
  const GPPosterior p(kSE, {}, {Eigen::Vector2d(1, 1), 0.0}, Dataset::from_points({{0, 1}, {2, 1}}));
  const auto b = certified_derivative_extrema(p, 0.0, 2.0, 1e-3);
  CHECK(std::abs(b.lower + b.upper) <= 2 * b.slack + 1e-12);
}

TEST_CASE("derivative extrema of a single bump against a dense scan") {
  const GPPosterior p(kSE, {}, {Eigen::Vector2d(1, 1), 0.0}, Dataset::from_points({{0, 2}}));
  const Scan s = dense_scan(p, 1, 0.0, 1.0, 100000);
  CHECK(s.min == doctest::Approx(-2 * std::exp(-0.5)).epsilon(1e-9));
  CHECK(s.max == 0.0);
  check_bracket(certified_derivative_extrema(p, 0.0, 1.0, 1e-3), s);
  const auto fine = certified_derivative_extrema(p, 0.0, 1.0, 1e-5);
  CHECK(std::abs(fine.lower - s.min) <= 1e-6);
  CHECK(std::abs(fine.upper - s.max) <= 1e-6);
}

TEST_CASE("slack shrinks at least linearly with the grid spacing") {
  std::mt19937_64 rng(51);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto prob = gen::problem(rng, 6, true);
    const auto p = gen::posterior_of(prob);
    const double lo = gen::uniform(rng, 0, 4);
    const double hi = lo + gen::uniform(rng, 0.5, 2);
    for (int order = 0; order <= 1; ++order) {
      const auto coarse = order == 0 ? certified_mean_extrema(p, lo, hi, 0.05) : certified_derivative_extrema(p, lo, hi, 0.05);
      const auto fine = order == 0 ? certified_mean_extrema(p, lo, hi, 0.005) : certified_derivative_extrema(p, lo, hi, 0.005);
      if (coarse.slack < 1e-12) continue;
      CHECK(fine.slack <= coarse.slack / 10 * (1 + 1e-9));
      ++compared;
    }
  }
  CHECK(compared > 300);
}

TEST_CASE("property: reported extrema bracket a 100x finer scan") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto prob = gen::problem(rng, 6, true);
    const auto p = gen::posterior_of(prob);
    const double lo = gen::uniform(rng, 0, 6);
    const double hi = lo + gen::uniform(rng, 0.05, 2);
    const double delta = gen::uniform(rng, 0.01, 0.1);
    const int points = 100 * static_cast<int>(std::ceil((hi - lo) / delta));
    const int order = trial % 2;
    const auto b = order == 0 ? certified_mean_extrema(p, lo, hi, delta) : certified_derivative_extrema(p, lo, hi, delta);
    check_bracket(b, dense_scan(p, order, lo, hi, points));
  }
}

TEST_CASE("invalid extrema arguments") {
  const GPPosterior p(kSE, {}, {Eigen::Vector2d(1, 1), 0.0}, Dataset::from_points({{0, 2}}));
  CHECK_THROWS_AS(certified_mean_extrema(p, 1.0, 1.0, 0.1), DomainError);
  CHECK_THROWS_AS(certified_mean_extrema(p, 0.0, 1.0, 0.0), DomainError);
  PeriodicTrainConfig c;
  CHECK_THROWS_AS(c.validate(example2()), ConfigError);
  c.k_bar = 10;
  c.eta = 0;
  CHECK_THROWS_AS(c.validate(example2()), ConfigError);
  c.eta = 4;
  CHECK_NOTHROW(c.validate(example2()));
  CHECK(c.grid_spacing(example2()) == doctest::Approx(0.01));
}

TEST_CASE("property: periodic posterior mean repeats with its period") {
  std::mt19937_64 rng(53);
  int checked = 0;
  while (checked < 100) {
    auto prob = gen::problem(rng, 6, true);
    if (!prob.periodic) continue;
    ++checked;
    const auto p = gen::posterior_of(prob);
    for (int q = 0; q < 50; ++q) {
      const double t = gen::uniform(rng, 0, 20);
      CHECK(std::abs(p.mean(t + prob.theta[2]) - p.mean(t)) <= 1e-9);
    }
  }
}

TEST_CASE("horizon shorter than the period is a violation") {
  const GPPosterior p(kPer, {}, {Eigen::Vector3d(1, 1, 3), 1e-2}, Dataset::from_points({{0, 0.0}}));
  const auto short_span = evaluate_interval_bounds(p, example2(), 20, 4, 0.01);
  CHECK(short_span.violation >= 3.0 - 2.0 - 1e-12);
  CHECK_FALSE(short_span.certified);
  const auto full = evaluate_interval_bounds(p, example2(), 30, 4, 0.01);
  CHECK(full.certified);
  CHECK(full.intervals.size() == 4);
  CHECK(full.intervals[3].t_end == doctest::Approx(3.0));
}

TEST_CASE("property: coarse partitions imply fine ones") {
  const auto sys = example2();
  const Dataset d = example2_data();
  std::mt19937_64 rng(54);
  int coarse_ok = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Hyperparameters th{Eigen::Vector3d(gen::uniform(rng, 0.05, 1.5), gen::uniform(rng, 0.5, 3),
                                             gen::uniform(rng, 2.5, 4)),
                             gen::uniform(rng, 0.05, 1.0)};
    const GPPosterior p(kPer, {}, th, d);
    const auto one = evaluate_interval_bounds(p, sys, 40, 1, 0.01);
    const auto sixteen = evaluate_interval_bounds(p, sys, 40, 16, 0.01);
    if (one.certified) {
      ++coarse_ok;
      CHECK(sixteen.certified);
    }
    CHECK(sixteen.violation <= one.violation + 1e-9);
  }
  CHECK(coarse_ok >= 5);
}

TEST_CASE("interval state bounds converge to the pointwise extremes") {
  const GPPosterior p(kPer, {}, {Eigen::Vector3d(1, 1, std::numbers::pi), 1e-2}, example2_data());
  const auto sys = example2();
  const Scan s = dense_scan(p, 0, 0, 4.0, 400000);
  double prev = 1e300;
  for (double delta : {0.1, 0.01, 0.001, 0.0001}) {
    const auto b = evaluate_interval_bounds(p, sys, 40, 16, delta);
    const double gap = std::max(s.min - b.mean.lower, b.mean.upper - s.max);
    CHECK(gap >= -1e-12);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("constraints inactive: same hyperparameters as the plain fit") {
  std::vector<Observation> obs;
  for (int i = 0; i < 12; ++i) obs.push_back({0.5 * i, std::sin(0.5 * i)});
  const Dataset d = Dataset::from_points(obs);
  const LinearSystem1D wide{0.9, 1.0, {-10, 10}, {-100, 100}, 0.1};
  PeriodicTrainConfig c;
  c.k_bar = 80;
  c.eta = 4;
  c.delta = 0.05;
  c.optimizer.multistart_count = 2;
  c.optimizer.noise_variance = 1e-3;
  c.optimizer.search_box = {Eigen::Vector3d(1e-2, 1e-1, 5), Eigen::Vector3d(1e1, 1e1, 8)};
  const auto cons = train_periodic(wide, d, c);
  const auto plain = minimize_nlml(kPer, {}, d, c.optimizer);
  CHECK(cons.outcome.feasible);
  CHECK(cons.bounds.certified);
  CHECK(cons.outcome.theta.values == plain.theta.values);
  CHECK(cons.outcome.nlml_value == plain.nlml_value);
  const GPPosterior p(kPer, {}, cons.outcome.theta, d);
  CHECK(certify_periodic(cons.outcome, wide, p, 3).trackable);
}

TEST_CASE("tiny input box makes fast data infeasible") {
  std::vector<Observation> obs;
  for (int i = 0; i < 10; ++i) obs.push_back({0.3 * i, std::sin(2 * 0.3 * i)});
  const LinearSystem1D sys{0.9, 0.1, {-2, 2}, {-0.01, 0.01}, 0.1};
  PeriodicTrainConfig c;
  c.k_bar = 40;
  c.eta = 4;
  c.delta = 0.05;
  c.optimizer.multistart_count = 2;
  c.optimizer.max_outer_iterations = 6;
  c.optimizer.noise_variance = 1e-3;
  c.optimizer.search_box = {Eigen::Vector3d(0.5, 0.1, 2.5), Eigen::Vector3d(5, 10, 4)};
  const auto out = train_periodic(sys, Dataset::from_points(obs), c);
  CHECK_FALSE(out.outcome.feasible);
  CHECK(out.outcome.max_violation > c.optimizer.constraint_tolerance);
  CHECK_FALSE(out.bounds.certified);
}

TEST_CASE("certify_periodic on a constant posterior and its preconditions") {
  const Dataset zero = Dataset::from_points({{0, 0}, {1, 0}});
  TrainOutcome o;
  o.theta = {Eigen::Vector3d(1, 1, 2), 1e-2};
  o.feasible = true;
  const GPPosterior p(kPer, {}, o.theta, zero);
  const auto r = certify_periodic(o, example2(), p, 5);
  CHECK(r.trackable);
  CHECK(r.reference_inputs.size() == 100);

  const GPPosterior se(kSE, {}, {Eigen::Vector2d(1, 1), 0.0}, zero);
  CHECK_THROWS_AS(certify_periodic(o, example2(), se, 5), PreconditionViolation);
  TrainOutcome other = o;
  other.theta.values(2) = 3;
  CHECK_THROWS_AS(certify_periodic(other, example2(), p, 5), PreconditionViolation);
  CHECK_THROWS_AS(certify_periodic(o, example2(), p, 0), DomainError);
}
