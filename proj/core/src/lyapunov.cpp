#include "potfield/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "potfield/error.hpp"

namespace potfield {

LyapunovResult lyapunov_exponents(const Trajectory& traj, double epsilon, int stride) {
  const Eigen::Index n = traj.size();
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride k must be >= 1");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (n <= stride + 1) throw Error(ErrorCode::TooShort, "trajectory shorter than k + 2 samples");

  const auto& x = traj.states;
  const double k_dt = stride * traj.dt;
  LyapunovResult result;
  result.params = {epsilon, stride, traj.dt};

  for (Eigen::Index i = 0; i + stride <= n - 1; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d0 = (x.row(i) - x.row(j)).norm();
      if (d0 > epsilon) continue;
      const Eigen::Index steps = (n - 1 - j) / stride;
      if (steps == 0) continue;
      if (d0 == 0.0) {
        ++result.skipped_pairs;
        continue;
      }
      double sum = 0.0;
      bool degenerate = false;
      for (Eigen::Index p = 1; p <= steps; ++p) {
        const double dp = (x.row(i + p * stride) - x.row(j + p * stride)).norm();
        if (dp == 0.0) {
          degenerate = true;
          break;
        }
        sum += std::log(dp / d0) / (static_cast<double>(p) * k_dt);
      }
      if (degenerate) {
        ++result.skipped_pairs;
        continue;
      }
      result.exponents.push_back(sum / static_cast<double>(steps));
    }
  }

  if (result.exponents.empty()) {
    throw Error(ErrorCode::NoPairs, "no pair of states lies within epsilon with forward samples left");
  }
  std::sort(result.exponents.begin(), result.exponents.end());
  result.lambda_max = result.exponents.back();
  result.pair_count = result.exponents.size();
  return result;
}

double distance_percentile(const Trajectory& traj, double percentile) {
  const Eigen::Index n = traj.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "need two states for pairwise distances");
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  constexpr double kMaxPairs = 4.0e6;
  const auto skip = static_cast<std::size_t>(std::ceil(total / kMaxPairs));

  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(std::min(total, kMaxPairs)) + 1);
  std::size_t counter = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (counter++ % skip == 0) d.push_back((traj.states.row(i) - traj.states.row(j)).norm());
    }
  }
  const double q = std::clamp(percentile, 0.0, 100.0) / 100.0;
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(d.size() - 1)));
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(idx), d.end());
  return d[idx];
}

int default_stride(double dt, double horizon_seconds) {
  if (!(dt > 0.0)) return 1;
  return std::max(1, static_cast<int>(std::lround(horizon_seconds / dt)));
}

const char* to_string(Stability s) noexcept { return s == Stability::Stable ? "Stable" : "Unstable"; }

Stability stability_verdict(const LyapunovResult& result) {
  return result.lambda_max < 0.0 ? Stability::Stable : Stability::Unstable;
}

}  // namespace potfield
