#pragma once

// End-to-end window analysis (gradient estimation -> GP -> Laplacian ->
// KL field -> attractor analytics) and its per-subwindow evolution.

#include <optional>
#include <string>
#include <vector>

#include "potfield/attractor.hpp"
#include "potfield/error.hpp"
#include "potfield/gp_field.hpp"
#include "potfield/market_data.hpp"

namespace potfield {

struct PipelineSettings {
  bool normalize = true;
  TrainOptions train;
  GridOptions grid;
  double kl_prior_var = 0.0;  // <= 0: prior Laplacian variance of the trained kernel
  int convergence_grace = 0;
};

struct WindowAnalysis {
  Trajectory working;  // trajectory in the coordinates the GP saw
  AxisFrame frame;
  PotentialFieldModel model;
  FieldPosterior field;
  KLField kl;
  double kl_prior_var = 0.0;
  AttractorSummary summary;
  TrendReport trend;
  std::optional<PrincipalAxes> axes;  // absent for a degenerate spectrum
  ConvergenceReport convergence;
};

/// Throws whatever the stages throw (DegenerateRange, SingularKernel, NoAttractorMass, ...).
WindowAnalysis analyze_window(const Trajectory& traj, const PipelineSettings& settings);

struct EvolutionEntry {
  double start = 0.0;
  double end = 0.0;
  bool ok = false;
  std::optional<ErrorCode> error_code;
  std::string error;
  Eigen::VectorXd mu_a;  // reporting units
  Eigen::VectorXd sd;    // per-asset std of the attractor, reporting units
  std::optional<AttractorSummary> summary;
};

struct Evolution {
  std::vector<std::string> assets;
  std::vector<EvolutionEntry> entries;
};

/// Splits the trajectory into consecutive non-overlapping subwindows of
/// `subwindow_seconds` (trailing pieces with fewer than 3 samples dropped)
/// and analyzes each one independently. Failures become gap entries.
Evolution temporal_evolution(const Trajectory& traj, double subwindow_seconds, const PipelineSettings& settings);

/// date, mu_a_<asset>..., sd_<asset>... ; empty fields for failed windows
std::string evolution_to_csv(const Evolution& evo);

struct FeatureRow {
  std::string date;
  std::optional<double> value;
  std::optional<double> sd;
};

/// One row per subwindow for the named asset. Throws UnknownAsset.
std::vector<FeatureRow> export_features(const Evolution& evo, const std::string& asset);
std::string features_to_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_features_csv(const std::string& text);

}  // namespace potfield
