#include "potfield/optimizer.hpp"

#include <cmath>
#include <limits>

namespace potfield {
namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Gradient with components that point out of the box at an active bound zeroed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi, Eigen::Array<bool, Eigen::Dynamic, 1>& active) {
  Eigen::VectorXd pg = g;
  active.setConstant(x.size(), false);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double tol = 1e-12 * (1.0 + std::abs(x[i]));
    if ((x[i] <= lo[i] + tol && g[i] > 0.0) || (x[i] >= hi[i] - tol && g[i] < 0.0)) {
      pg[i] = 0.0;
      active[i] = true;
    }
  }
  return pg;
}

}  // namespace

MinimizeResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, int max_iterations, double tolerance) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  res.x = project(x0, lower, upper);
  Eigen::VectorXd g(n);
  res.value = f(res.x, &g);
  res.initial_value = res.value;
  if (!std::isfinite(res.value) || !g.allFinite()) return res;

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  Eigen::Array<bool, Eigen::Dynamic, 1> active;
  constexpr double kMaxStep = 2.0;  // in log-parameter units

  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    Eigen::VectorXd pg = projected_gradient(res.x, g, lower, upper, active);
    if (pg.lpNorm<Eigen::Infinity>() < 1e-10) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d = -(h * pg);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[i]) d[i] = 0.0;
    }
    if (g.dot(d) >= 0.0) {
      h.setIdentity();
      fresh = true;
      d = -pg;
    }
    const double longest = d.lpNorm<Eigen::Infinity>();
    if (longest > kMaxStep) d *= kMaxStep / longest;

    double step = 1.0;
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = project(res.x + step * d, lower, upper);
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= res.value + 1e-4 * g.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;
      h.setIdentity();
      fresh = true;
      continue;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double change = res.value - f_new;
    res.x = x_new;
    g = g_new;
    res.value = f_new;

    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        h *= sy / y.squaredNorm();
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      h = v * h * v.transpose() + rho * s * s.transpose();
    }
    if (change <= tolerance * (1.0 + std::abs(res.value))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace potfield
