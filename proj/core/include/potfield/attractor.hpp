#pragma once

// KL-weighted attractor/repeller moments and the analytics derived from them.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "potfield/gp_field.hpp"
#include "potfield/market_data.hpp"

namespace potfield {

/// 0.5 * (var_pr/var_po + mu_po^2/var_po - 1 + log(sd_po/sd_pr)) against a
/// zero-mean prior, floored at 0. Throws NonPositiveVariance.
double kl_divergence(double mu_po, double var_po, double var_pr);

struct KLField {
  Eigen::MatrixXd points;  // Q x M
  Eigen::VectorXd kl;
  Eigen::VectorXi sign;    // +1 where the Laplacian mean is >= 0, else -1
  Eigen::VectorXd k_a;     // kl where sign = +1
  Eigen::VectorXd k_r;     // kl where sign = -1
};

/// Posterior Laplacian variances are floored at 1e-12 before scoring.
KLField build_kl_field(const FieldPosterior& field, double prior_var);

/// Maps working coordinates to reporting units (prices) and to the unit box.
struct AxisFrame {
  std::vector<MinMax> ranges;  // per-asset price range of the window
  bool normalized = false;     // working coordinates are already in [0, 1]

  /// Frame of a trajectory: its stored normalization if present, else its own column ranges.
  static AxisFrame of(const Trajectory& traj);

  /// Per-axis divisor taking working coordinates to normalized units.
  Eigen::VectorXd unit_scale() const;
  /// Per-axis factor taking working coordinates to reporting units.
  Eigen::VectorXd report_scale() const;
  /// Working coordinates -> reporting units (positions, not deltas).
  Eigen::VectorXd to_report(const Eigen::VectorXd& x) const;
};

struct AttractorSummary {
  Eigen::VectorXd mu_a;
  Eigen::MatrixXd sigma_a;
  std::optional<Eigen::VectorXd> mu_r;
  std::optional<Eigen::MatrixXd> sigma_r;
  double sigma_a_scalar = 0.0;  // det(Sigma_a)^(1/(2M)) in normalized units
  Eigen::VectorXd eigvals;      // descending, clamped >= 0
  Eigen::MatrixXd eigvecs;      // columns match eigvals
  double window_start = 0.0;
  double window_end = 0.0;
  double attractor_mass = 0.0;
  double repeller_mass = 0.0;
};

/// Weighted means and covariances of the attractor (k_a) and repeller (k_r)
/// masses. `unit_scale` (empty = ones) converts to normalized units for the
/// scalar radius. Throws NoAttractorMass.
AttractorSummary attractor_moments(const KLField& klf, double window_start, double window_end,
                                   const Eigen::VectorXd& unit_scale = {});

struct TrendReport {
  Eigen::VectorXd x0;
  Eigen::VectorXd magnitude;            // mu_a - x0 in reporting units
  std::optional<double> direction_deg;  // first two assets, normalized axes, [0, 360)
  Eigen::VectorXd p_pos;
  Eigen::VectorXd p_neg;
};

TrendReport trend_report(const AttractorSummary& summary, const Eigen::VectorXd& x0, const AxisFrame& frame);

struct PhaseAngle {
  Eigen::Index axis = 0;
  Eigen::Index other = 1;
  double degrees = 0.0;  // [0, 180)
};

struct PrincipalAxes {
  double eigval_max = 0.0;
  Eigen::VectorXd eigvec_max;  // largest-magnitude entry positive
  std::vector<PhaseAngle> phases;
};

/// Throws DegenerateSpectrum when the top two eigenvalues agree to 1e-9 relative.
PrincipalAxes principal_axes(const AttractorSummary& summary);

struct ConvergenceInterval {
  Eigen::Index onset_index = 0;
  Eigen::Index end_index = 0;  // inclusive
  double onset_time = 0.0;
  double end_time = 0.0;
  double duration() const { return end_time - onset_time; }
};

struct ConvergenceReport {
  std::vector<ConvergenceInterval> intervals;
  std::optional<std::size_t> longest;
  Eigen::VectorXd distances;  // normalized distance of every state to mu_a
  double radius = 0.0;
};

/// Runs of states with |x_n - mu_a| <= radius (normalized units); runs separated
/// by at most `grace` out-of-radius samples are merged. radius < 0 means use
/// summary.sigma_a_scalar.
ConvergenceReport convergence_windows(const Trajectory& traj, const AttractorSummary& summary,
                                      const AxisFrame& frame, int grace = 0, double radius = -1.0);

/// Closed polylines of the 1/2/3-sigma ellipses of N(mu_a, Sigma_a) projected
/// on the first two axes.
struct EllipseContour {
  double level = 1.0;
  Eigen::MatrixXd points;  // P x 2
};
std::vector<EllipseContour> ellipse_contours(const AttractorSummary& summary, const std::vector<double>& levels = {1, 2, 3},
                                             int points = 64);

std::string kl_field_to_csv(const KLField& klf, const std::vector<std::string>& labels);
std::string ellipses_to_csv(const std::vector<EllipseContour>& contours);

}  // namespace potfield
