#pragma once

#include <cstddef>
#include <vector>

#include "potfield/market_data.hpp"

namespace potfield {

struct LyapunovParams {
  double epsilon = 0.0;  // state-space neighbourhood radius
  int stride = 1;        // k, in samples
  double dt = 1.0;       // seconds per sample
};

struct LyapunovResult {
  std::vector<double> exponents;  // ascending
  double lambda_max = 0.0;
  std::size_t pair_count = 0;
  std::size_t skipped_pairs = 0;  // zero initial or forward separation
  LyapunovParams params;
};

/// Pairwise-divergence estimate over one trajectory: every pair (i < j) with
/// i <= N-k-1 and |x_i - x_j| <= epsilon contributes the mean of
/// log(|x_{i+pk} - x_{j+pk}| / |x_i - x_j|) / (p k dt) over p = 1..floor((N-1-j)/k).
/// Throws TooShort (N <= k+1), InvalidArgument, or NoPairs.
LyapunovResult lyapunov_exponents(const Trajectory& traj, double epsilon, int stride);

/// Percentile (0..100) of the pairwise state distances; large trajectories
/// use a deterministic strided subsample of the pairs.
double distance_percentile(const Trajectory& traj, double percentile);

/// Samples spanning roughly `horizon_seconds`, at least 1.
int default_stride(double dt, double horizon_seconds = 3600.0);

enum class Stability { Stable, Unstable };

const char* to_string(Stability s) noexcept;

/// Stable iff lambda_max < 0.
Stability stability_verdict(const LyapunovResult& result);

}  // namespace potfield
