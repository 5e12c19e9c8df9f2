#include <benchmark/benchmark.h>

#include <random>

#include "tempgen/tensor.hpp"

using namespace tempgen;

namespace {

Tensor random_tensor(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = nd(rng);
  return Tensor::from(shape, std::move(v));
}

void BM_Conv2dForward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({32, channels, 12, 12}, 1);
  const Tensor w = random_tensor({channels, channels, 5, 5}, 2);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w).data().data());
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Conv2dForward)->Arg(4)->Arg(16)->Arg(24)->Unit(benchmark::kMicrosecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  Tensor x = random_tensor({32, channels, 12, 12}, 3);
  Tensor w = random_tensor({channels, channels, 5, 5}, 4);
  x.set_requires_grad(true);
  w.set_requires_grad(true);
  for (auto _ : state) {
    const auto g = grad(sum(conv2d(x, w)), {x, w});
    benchmark::DoNotOptimize(g[1].data().data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 5);
  const Tensor b = random_tensor({n, n}, 6);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b).data().data());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oNCubed);

}  // namespace

BENCHMARK_MAIN();
