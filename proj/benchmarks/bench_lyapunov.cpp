#include <benchmark/benchmark.h>

#include <random>

#include "potfield/lyapunov.hpp"
#include "potfield/market_data.hpp"

namespace {

potfield::Trajectory random_walk(Eigen::Index n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> step;
  potfield::Trajectory t;
  t.states.resize(n, 2);
  t.dt = 300.0;
  t.assets = {"a", "b"};
  Eigen::Vector2d x(100.0, 50.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    x += Eigen::Vector2d(step(rng), step(rng));
    t.states.row(i) = x.transpose();
    t.times.push_back(static_cast<double>(i) * t.dt);
  }
  return t;
}

}  // namespace

static void BM_LyapunovExponents(benchmark::State& state) {
  const auto traj = potfield::normalize_minmax(random_walk(state.range(0)));
  const double eps = potfield::distance_percentile(traj, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(potfield::lyapunov_exponents(traj, eps, 12));
}
BENCHMARK(BM_LyapunovExponents)->Arg(288)->Arg(864)->Unit(benchmark::kMillisecond);
