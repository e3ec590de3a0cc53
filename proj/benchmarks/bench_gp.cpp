#include <benchmark/benchmark.h>

#include <random>

#include "potfield/gp_field.hpp"
#include "potfield/market_data.hpp"
#include "potfield/synth.hpp"

namespace {

potfield::GradientObservations well_observations(std::size_t steps) {
  potfield::SynthSpec spec;
  potfield::QuadraticWell q;
  q.center = Eigen::Vector2d(1.0, 2.0);
  q.curvature = Eigen::Vector2d(40.0, 60.0).asDiagonal();
  spec.potential = q;
  spec.gamma = 0.3;
  spec.noise_std = 0.05;
  spec.x0 = Eigen::Vector2d(2.0, 2.0);
  spec.v0 = Eigen::Vector2d(0.0, 4.0);
  spec.steps = steps;
  return potfield::estimate_gradient_observations(potfield::normalize_minmax(potfield::simulate(spec, 1)));
}

potfield::SEKernelParams fixed_params() {
  potfield::SEKernelParams p;
  p.sigma_se = 10.0;
  p.lambdas = Eigen::Vector2d(0.04, 0.06);
  p.noise_var = 0.2;
  return p;
}

}  // namespace

static void BM_LogMarginalLikelihood(benchmark::State& state) {
  const auto obs = well_observations(static_cast<std::size_t>(state.range(0)));
  const auto p = fixed_params();
  Eigen::VectorXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(potfield::log_marginal_likelihood(obs, p, &grad));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LogMarginalLikelihood)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oNCubed);

static void BM_Train(benchmark::State& state) {
  const auto obs = well_observations(static_cast<std::size_t>(state.range(0)));
  potfield::TrainOptions opts;
  opts.starts = 2;
  opts.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(potfield::train(obs, opts));
}
BENCHMARK(BM_Train)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

static void BM_PosteriorField(benchmark::State& state) {
  const auto obs = well_observations(300);
  const auto model = potfield::fit(obs, fixed_params());
  potfield::GridOptions grid;
  grid.points_per_axis = static_cast<int>(state.range(0));
  const auto pts = potfield::make_test_grid(obs.X, grid);
  for (auto _ : state) benchmark::DoNotOptimize(potfield::posterior_field(model, pts));
  state.SetItemsProcessed(state.iterations() * pts.rows());
}
BENCHMARK(BM_PosteriorField)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);
