#pragma once

// Price ingestion, multi-asset alignment, min-max scaling and the
// second-difference estimate of the potential gradient.

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "potfield/time_util.hpp"

namespace potfield {

struct PriceRecord {
  UnixSeconds timestamp = 0;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
};

/// Column names looked up in the CSV header row.
struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string open = "open";
  std::string high = "high";
  std::string low = "low";
  std::string close = "close";
  std::string volume = "volume";
};

/// Reads OHLCV rows in file order. Throws MissingColumn, UnparsableRow(line)
/// or NonMonotoneTimestamps(line); line numbers are 1-based and count the header.
std::vector<PriceRecord> parse_csv(const std::string& path, const CsvSchema& schema = {});
std::vector<PriceRecord> parse_csv(std::istream& in, const CsvSchema& schema = {});

struct MinMax {
  double min = 0.0;
  double max = 0.0;
  double span() const { return max - min; }
};

/// Time-ordered M-dimensional state sequence. Row n of `states` is x_n.
struct Trajectory {
  Eigen::MatrixXd states;
  std::vector<double> times;  // seconds, one per row
  double dt = 1.0;
  std::vector<std::string> assets;
  std::optional<std::vector<MinMax>> norm;  // set when states are min-max scaled

  Eigen::Index size() const { return states.rows(); }
  Eigen::Index dim() const { return states.cols(); }

  /// Rows [begin, end).
  Trajectory slice(Eigen::Index begin, Eigen::Index end) const;

  /// Throws InvalidArgument when shapes or values break the type's invariants.
  void validate() const;
};

struct AssetSeries {
  std::string label;
  std::vector<PriceRecord> records;
};

enum class PriceField { Close, Open, Mean };

/// Parses "close" | "open" | "mean".
std::optional<PriceField> parse_price_field(std::string_view name);

/// Resamples every asset onto the epoch-aligned grid k*resample (forward fill
/// from the last record at or before each grid point) and keeps the grid
/// points common to all assets. Columns follow input order.
Trajectory build_trajectory(std::span<const AssetSeries> series, PriceField field,
                            UnixSeconds resample);

/// Maps each column to [0, 1]; throws DegenerateRange for a constant column.
Trajectory normalize_minmax(const Trajectory& traj);

/// Undoes normalize_minmax; identity for raw trajectories.
Trajectory denormalize(const Trajectory& traj);

/// Noisy gradient samples y_i = -(x_{i+1} - 2 x_i + x_{i-1}) / dt^2 paired
/// with the interior states x_i.
struct GradientObservations {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  double noise_hint = 0.0;
};

GradientObservations estimate_gradient_observations(const Trajectory& traj);

std::string trajectory_to_csv(const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Reads "timestamp,<asset>..." rows. The sampling interval is recovered from
/// the timestamps; throws NonUniformSampling if they are not equally spaced.
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace potfield
