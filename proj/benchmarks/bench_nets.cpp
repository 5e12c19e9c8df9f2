#include <benchmark/benchmark.h>

#include <random>

#include "tempgen/nets.hpp"
#include "tempgen/objectives.hpp"

using namespace tempgen;

namespace {

NetConfig config(int which) { return which == 0 ? NetConfig::toy() : NetConfig::paper(); }

Tensor noise(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(n * kNoiseDim);
  for (auto& x : v) x = nd(rng);
  return Tensor::from({n, kNoiseDim}, std::move(v));
}

Tensor labels(std::size_t n) {
  std::vector<ConditionLabel> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({unsigned(i % 12 + 1), {1, 1}, {0}});
  return label_tensor(out);
}

void BM_GeneratorForward(benchmark::State& state) {
  Generator g(config(int(state.range(0))).generator, 1);
  const Tensor z = noise(32);
  const Tensor lbl = labels(32);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(g.forward(z, lbl, false).data().data());
  state.SetItemsProcessed(state.iterations() * 32);
  state.SetLabel(state.range(0) == 0 ? "toy" : "paper");
}
BENCHMARK(BM_GeneratorForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SpatialCriticLoss(benchmark::State& state) {
  const NetConfig nets = config(int(state.range(0)));
  SpatialCritic d(nets.spatial, 2);
  Generator g(nets.generator, 3);
  const Tensor lbl = labels(32);
  Tensor real, fake;
  {
    NoGradGuard no_grad;
    real = g.forward(noise(32), lbl, false);
    fake = g.forward(noise(32), lbl, true);
  }
  const std::vector<double> u(32, 0.5);
  const LossConfig cfg;
  for (auto _ : state) {
    d.params().zero_grad();
    loss_d_spatial(d, real, fake, lbl, u, cfg).loss.backward();
  }
  state.SetLabel(state.range(0) == 0 ? "toy" : "paper");
}
BENCHMARK(BM_SpatialCriticLoss)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
