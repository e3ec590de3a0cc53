#pragma once

// Flat key=value run configuration shared by every subcommand.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "potfield/market_data.hpp"
#include "potfield/pipeline.hpp"
#include "potfield/wavelet.hpp"

namespace potfield::app {

struct RunConfig {
  std::vector<std::string> assets;                           // empty: every input in file order
  std::vector<std::pair<std::string, std::string>> inputs;   // asset -> OHLCV CSV path
  std::string trajectory;                                    // alternative input: trajectory CSV
  CsvSchema schema;
  std::string price_field = "close";
  std::int64_t resample = 300;
  std::string window_start;  // ISO-8601 or Unix seconds; empty = unbounded
  std::string window_end;
  double subwindow = 86400.0;
  bool normalize = true;

  int gp_starts = 8;
  std::uint64_t gp_seed = 42;
  double gp_bound_low = 1e-3;
  double gp_bound_high = 1e3;
  int gp_max_iter = 200;
  std::int64_t gp_max_points = 0;

  int grid_points_per_axis = 0;
  double grid_padding = 0.1;
  int grid_qmc_points = 4096;

  double kl_prior_var = 0.0;

  double lyapunov_epsilon_percentile = 5.0;
  double lyapunov_epsilon = 0.0;
  int lyapunov_k = 0;

  double wavelet_omega0 = 6.0;
  int wavelet_voices = 12;
  double wavelet_scale_window = 0.6;
  double wavelet_time_window = 1.0;

  int convergence_grace = 0;
  std::string out = "out";

  /// Directory that relative input paths resolve against.
  std::filesystem::path base_dir = ".";

  PipelineSettings pipeline() const;
  CoherenceSettings coherence() const;
};

/// Every key with its default value, one "key = value" per line.
std::string defaults_text();

/// Applies one setting; throws InvalidArgument for unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses a config file body ('#' comments, blank lines allowed).
void apply_config_text(RunConfig& cfg, const std::string& text);

/// Reads a file and resolves relative input paths against its directory.
RunConfig load_config(const std::filesystem::path& path);

/// Throws InvalidArgument for inconsistent settings (window order, counts).
void validate(const RunConfig& cfg);

/// Resolved settings, without the output directory.
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Loads the configured prices (or trajectory file), restricted to the window
/// and to the selected assets in the selected order.
Trajectory load_trajectory(const RunConfig& cfg);

}  // namespace potfield::app
