#pragma once

// Ground-truth trajectories from known potentials, integrated with RK4:
//   x'' = -grad phi(x, t) - gamma x' + noise_std * xi
// The noise is an acceleration drawn once per step.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "potfield/market_data.hpp"

namespace potfield {

/// phi = 1/2 (x - c(t))^T A (x - c(t)),  c(t) = center + center_velocity * t
struct QuadraticWell {
  Eigen::VectorXd center;
  Eigen::MatrixXd curvature;
  Eigen::VectorXd center_velocity;  // empty or zero for a fixed well
};

/// phi = height * ((x - center)^2 / width^2 - 1)^2, one dimension.
struct DoubleWell {
  double center = 0.0;
  double width = 1.0;
  double height = 1.0;
};

struct SynthSpec {
  std::variant<QuadraticWell, DoubleWell> potential;
  double gamma = 0.0;
  double noise_std = 0.0;
  Eigen::VectorXd x0;
  Eigen::VectorXd v0;
  double dt = 0.01;
  std::size_t steps = 1000;  // rows in the output, x0 included
  double t0 = 0.0;
  std::vector<std::string> assets;  // column names; defaults to x1..xM

  Eigen::Index dim() const;

  /// Throws InvalidArgument for shape errors or a non-SPD curvature and
  /// UnstableStep when dt * sqrt(max curvature) >= 0.1.
  void validate() const;
};

Trajectory simulate(const SynthSpec& spec, std::uint64_t seed);

double potential(const SynthSpec& spec, const Eigen::VectorXd& x, double t = 0.0);
Eigen::VectorXd analytic_gradient(const SynthSpec& spec, const Eigen::VectorXd& x, double t = 0.0);

/// 1/2 |v|^2 + phi(x, t)
double total_energy(const SynthSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t = 0.0);

/// Velocities matching simulate(), row n for step n.
struct PhaseTrajectory {
  Trajectory positions;
  Eigen::MatrixXd velocities;
};
PhaseTrajectory simulate_phase(const SynthSpec& spec, std::uint64_t seed);

/// key=value spec file. Keys: potential (quadratic | double_well), center,
/// curvature (rows split by ';'), center_velocity, width, height, gamma,
/// noise_std, x0, v0, dt, steps, t0, assets. Throws InvalidArgument.
SynthSpec parse_synth_spec(std::istream& in);
SynthSpec read_synth_spec(const std::string& path);

}  // namespace potfield
