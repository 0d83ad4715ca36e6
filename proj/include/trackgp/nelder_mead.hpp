#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace trackgp::detail {

struct SimplexResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

struct SimplexOptions {
  double initial_step = 0.5;
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-9;
  int max_evaluations = 2000;
  int max_restarts = 3;
};

/// Box-projected Nelder-Mead. Non-finite objective values count as +inf.
/// Restarts from the incumbent with a fresh simplex until a restart stops
/// improving, which guards against premature collapse in narrow valleys.
template <typename F>
SimplexResult nelder_mead(F&& objective, Eigen::VectorXd start, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper, const SimplexOptions& opt) {
  const Eigen::Index n = start.size();
  const double inf = std::numeric_limits<double>::infinity();
  SimplexResult result;
  auto project = [&](Eigen::VectorXd x) { return x.cwiseMax(lower).cwiseMin(upper); };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : inf;
  };

  result.x = project(std::move(start));
  result.value = eval(result.x);

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1));
    std::vector<double> vals(static_cast<std::size_t>(n + 1));
    pts[0] = result.x;
    vals[0] = result.value;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd p = result.x;
      p(i) += opt.initial_step;
      if (p(i) > upper(i)) p(i) = result.x(i) - opt.initial_step;
      pts[static_cast<std::size_t>(i + 1)] = project(p);
      vals[static_cast<std::size_t>(i + 1)] = eval(pts[static_cast<std::size_t>(i + 1)]);
    }
    std::vector<std::size_t> order(pts.size());

    while (result.evaluations < opt.max_evaluations) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[order.size() - 2];

      double x_spread = 0.0;
      for (const auto& p : pts) x_spread = std::max(x_spread, (p - pts[best]).cwiseAbs().maxCoeff());
      const bool f_converged =
          std::isfinite(vals[worst]) &&
          vals[worst] - vals[best] <= opt.f_tolerance * (1.0 + std::abs(vals[best]));
      if (f_converged && x_spread <= std::max(opt.x_tolerance, 1e-6)) break;
      if (x_spread <= opt.x_tolerance) break;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i != worst) centroid += pts[i];
      }
      centroid /= static_cast<double>(n);

      const Eigen::VectorXd reflected = project(centroid + (centroid - pts[worst]));
      const double f_reflected = eval(reflected);
      if (f_reflected < vals[best]) {
        const Eigen::VectorXd expanded = project(centroid + 2.0 * (centroid - pts[worst]));
        const double f_expanded = eval(expanded);
        if (f_expanded < f_reflected) {
          pts[worst] = expanded;
          vals[worst] = f_expanded;
        } else {
          pts[worst] = reflected;
          vals[worst] = f_reflected;
        }
        continue;
      }
      if (f_reflected < vals[second]) {
        pts[worst] = reflected;
        vals[worst] = f_reflected;
        continue;
      }
      const bool outside = f_reflected < vals[worst];
      const Eigen::VectorXd contracted =
          outside ? project(centroid + 0.5 * (reflected - centroid))
                  : project(centroid + 0.5 * (pts[worst] - centroid));
      const double f_contracted = eval(contracted);
      if (f_contracted < std::min(f_reflected, vals[worst])) {
        pts[worst] = contracted;
        vals[worst] = f_contracted;
        continue;
      }
      // Shrink towards the best vertex.
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == best) continue;
        pts[i] = project(pts[best] + 0.5 * (pts[i] - pts[best]));
        vals[i] = eval(pts[i]);
      }
    }

    const auto it = std::min_element(vals.begin(), vals.end());
    const std::size_t idx = static_cast<std::size_t>(it - vals.begin());
    const double previous = result.value;
    if (vals[idx] <= result.value) {
      result.value = vals[idx];
      result.x = pts[idx];
    }
    if (result.evaluations >= opt.max_evaluations) break;
    if (!(previous - result.value > opt.f_tolerance * (1.0 + std::abs(result.value)))) break;
  }
  return result;
}

}  // namespace trackgp::detail
