// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "agentpanel/rng.hpp"
#include "agentpanel/scaling_analysis.hpp"
#include "agentpanel/stats_engine.hpp"
#include "agentpanel/synthetic_lab.hpp"

using namespace agentpanel;

namespace {

ScoreMatrix matrix(std::size_t rows, std::size_t cols) {
  Rng rng(rows * 131 + cols);
  ScoreMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform();
  }
  return m;
}

void BM_VarianceComponents(benchmark::State& state) {
  const auto m = matrix(15, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(variance_components(m));
}
BENCHMARK(BM_VarianceComponents)->Arg(8)->Arg(32)->Arg(128);

void BM_IccBootstrap(benchmark::State& state) {
  const auto m = matrix(15, 32);
  BootstrapOptions boot;
  boot.resamples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(icc2k(m, boot));
}
BENCHMARK(BM_IccBootstrap)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitScalingModels(benchmark::State& state) {
  std::vector<ScalingPoint> pts;
  for (const int k : kCanonicalSizes) pts.push_back({double(k), 0.4 + 0.12 * std::log(k)});
  for (auto _ : state) benchmark::DoNotOptimize(fit_scaling_models(pts));
}
BENCHMARK(BM_FitScalingModels);

void BM_SyntheticExperiment(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_synthetic_experiment({}, shipped_pool(), shipped_catalog(), 42));
  }
}
BENCHMARK(BM_SyntheticExperiment)->Unit(benchmark::kMillisecond);

}  // namespace
