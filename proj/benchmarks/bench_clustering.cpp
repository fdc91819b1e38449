// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <cmath>

#include "agentpanel/dedup_engine.hpp"
#include "agentpanel/rng.hpp"

using namespace agentpanel;

namespace {

std::vector<EmbeddingVector> corpus(std::size_t n, std::size_t dim) {
  Rng rng(n);
  std::vector<EmbeddingVector> out(n, EmbeddingVector(dim));
  for (auto& v : out) {
    double norm = 0.0;
    for (auto& x : v) {
      x = rng.normal(0.0, 1.0) + 0.5;
      norm += x * x;
    }
    for (auto& x : v) x /= std::sqrt(norm);
  }
  return out;
}

void BM_SimilarityMatrix(benchmark::State& state) {
  const auto v = corpus(static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(SimilarityMatrix(v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SimilarityMatrix)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_AverageLinkage(benchmark::State& state) {
  const SimilarityMatrix sims(corpus(static_cast<std::size_t>(state.range(0)), 64));
  for (auto _ : state) benchmark::DoNotOptimize(cluster(sims, 0.65));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AverageLinkage)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_HashedEmbedding(benchmark::State& state) {
  std::vector<std::string> texts;
  for (int i = 0; i < state.range(0); ++i) {
    texts.push_back("response ignored the error code " + std::to_string(i) + " twice");
  }
  HashedBagEmbedder e;
  for (auto _ : state) benchmark::DoNotOptimize(e.embed(texts));
}
BENCHMARK(BM_HashedEmbedding)->Arg(1000);

}  // namespace
