#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "potfield/wavelet.hpp"

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e;
  std::vector<double> x(n);
  for (auto& v : x) v = e(rng);
  return x;
}

std::vector<double> times(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = 300.0 * static_cast<double>(i);
  return t;
}

}  // namespace

static void BM_Cwt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, 1);
  const auto scales = potfield::default_scales(n, 300.0);
  for (auto _ : state) benchmark::DoNotOptimize(potfield::cwt(x, 300.0, scales));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Cwt)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);

static void BM_Coherence(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, 1), y = noise(n, 2);
  const auto t = times(n);
  for (auto _ : state) benchmark::DoNotOptimize(potfield::coherence(x, y, t));
}
BENCHMARK(BM_Coherence)->Arg(864)->Arg(2016)->Unit(benchmark::kMillisecond);
