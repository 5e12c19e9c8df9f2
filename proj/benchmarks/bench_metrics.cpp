#include <benchmark/benchmark.h>

#include <random>

#include "tempgen/metrics.hpp"

using namespace tempgen;

namespace {

std::vector<TemperatureSample> corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(280.0, 3.0);
  std::vector<TemperatureSample> out(n);
  for (auto& s : out)
    for (auto& v : s.values) v = nd(rng);
  return out;
}

void BM_PpccMatrix(benchmark::State& state) {
  const auto samples = corpus(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(ppcc_matrix(samples).rho.data());
  state.SetItemsProcessed(state.iterations() * state.range(0) * 24);
}
BENCHMARK(BM_PpccMatrix)->Arg(31)->Arg(124)->Arg(1000);

void BM_Tgdd(benchmark::State& state) {
  const auto real = corpus(static_cast<std::size_t>(state.range(0)), 2);
  const auto gen = corpus(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(tgdd(real, gen).value);
}
BENCHMARK(BM_Tgdd)->Arg(31)->Arg(124);

void BM_QqEnvelope(benchmark::State& state) {
  const auto real = pooled_values(corpus(31, 4));
  const RealizationSampler sampler = [](std::uint64_t seed) { return pooled_values(corpus(31, seed)); };
  for (auto _ : state) benchmark::DoNotOptimize(qq_envelope(real, sampler, 20).median.data());
}
BENCHMARK(BM_QqEnvelope)->Unit(benchmark::kMillisecond);

}  // namespace
