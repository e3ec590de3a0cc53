#pragma once

#include <Eigen/Dense>
#include <functional>

namespace potfield {

/// Objective to minimize; fills the gradient when the pointer is non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected BFGS on the box [lower, upper] with Armijo backtracking along the
/// projected path. Accepted steps never increase the objective. A non-finite
/// value at a trial point is treated as a failed step.
MinimizeResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, int max_iterations, double tolerance);

}  // namespace potfield
