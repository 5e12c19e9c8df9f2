#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gradcheck.hpp"
#include "tiny_critic.hpp"
#include "tempgen/error.hpp"
#include "tempgen/objectives.hpp"

using namespace tempgen;
using check::make_tiny;
using check::TinyCritic;

namespace {

constexpr std::size_t kSample = 24 * 8 * 8;

Tensor labels_for(std::size_t n) {
  std::vector<ConditionLabel> l(n, ConditionLabel{1, {1, 1}, {0}});
  return label_tensor(l);
}

CriticFn constant_critic(double c) {
  return [c](const Tensor& x, const Tensor&) {
    // Depends on x with zero weight so the graph stays connected.
    return add_scalar(reshape(scale(row_sum(x), 0.0), {x.dim(0), 1}), c);
  };
}

/// D(x) = <w, x> over the flattened sample.
CriticFn linear_critic(const Tensor& w) {
  return [w](const Tensor& x, const Tensor&) { return matmul(flatten(x), reshape(w, {w.numel(), 1})); };
}

Tensor unit_vector(std::mt19937_64& rng) {
  Tensor w = check::random_tensor({kSample}, rng);
  double n = 0.0;
  for (double v : w.data()) n += v * v;
  for (auto& v : w.mutable_data()) v /= std::sqrt(n);
  return w;
}

// --- temporal gradients ---------------------------------------------------------

TEST(TemporalGradients, ConstantSampleGivesZeros) {
  TemperatureSample s;
  for (auto& v : s.values) v = 281.5;
  const auto g = temporal_gradients(s);
  ASSERT_EQ(g.size(), 23u * 64u);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(TemporalGradients, LinearRampGivesOnes) {
  TemperatureSample s;
  for (std::size_t t = 0; t < 24; ++t)
    for (std::size_t p = 0; p < 64; ++p) s.values[t * 64 + p] = double(t);
  for (double v : temporal_gradients(s)) EXPECT_EQ(v, 1.0);
}

TEST(TemporalGradients, SineMatchesDirectDifferences) {
  TemperatureSample s;
  for (std::size_t t = 0; t < 24; ++t) s.at(t, 3, 5) = std::sin(2.0 * std::numbers::pi * double(t) / 24.0);
  const auto g = temporal_gradients(s);
  for (std::size_t t = 0; t < 23; ++t) {
    const double expected =
        std::sin(2.0 * std::numbers::pi * double(t + 1) / 24.0) - std::sin(2.0 * std::numbers::pi * double(t) / 24.0);
    EXPECT_NEAR(g[t * 64 + 3 * 8 + 5], expected, 1e-15);
    EXPECT_EQ(g[t * 64], 0.0);
  }
}

TEST(TemporalGradients, WrongFrameCountIsRejected) {
  TemperatureSample s;
  s.values.resize(23 * 64);
  EXPECT_THROW(temporal_gradients(s), ShapeError);
}

// --- interpolation ------------------------------------------------------------

TEST(GpInterpolate, EndpointsAndMidpoint) {
  const Tensor real = Tensor::full({2, 24, 8, 8}, 300.0);
  const Tensor fake = Tensor::full({2, 24, 8, 8}, 280.0);
  const Tensor at_real = gp_interpolate(real, fake, {1.0, 1.0});
  const Tensor at_fake = gp_interpolate(real, fake, {0.0, 0.0});
  const Tensor mid = gp_interpolate(real, fake, {0.5, 0.5});
  for (std::size_t i = 0; i < real.numel(); ++i) {
    EXPECT_EQ(at_real[i], 300.0);
    EXPECT_EQ(at_fake[i], 280.0);
    EXPECT_EQ(mid[i], 290.0);
  }
}

TEST(GpInterpolate, OneFactorPerSample) {
  const Tensor real = Tensor::full({2, 24, 8, 8}, 1.0);
  const Tensor fake = Tensor::full({2, 24, 8, 8}, 0.0);
  const Tensor x = gp_interpolate(real, fake, {0.25, 0.75});
  EXPECT_EQ(x[0], 0.25);
  EXPECT_EQ(x[kSample - 1], 0.25);
  EXPECT_EQ(x[kSample], 0.75);
}

TEST(GpInterpolate, MismatchIsRejected) {
  EXPECT_THROW(gp_interpolate(Tensor::zeros({2, 24, 8, 8}), Tensor::zeros({3, 24, 8, 8}), {0.1, 0.2}), ShapeError);
  EXPECT_THROW(gp_interpolate(Tensor::zeros({2, 24, 8, 8}), Tensor::zeros({2, 24, 8, 8}), {0.1}), ShapeError);
  EXPECT_THROW(gp_interpolate(Tensor::zeros({1, 24, 8, 8}), Tensor::zeros({1, 24, 8, 8}), {1.5}), Error);
}

// --- critic losses ------------------------------------------------------------

TEST(CriticLoss, ConstantCriticWithoutPenaltyIsZero) {
  std::mt19937_64 rng(1);
  const Tensor real = check::random_tensor({3, 24, 8, 8}, rng);
  const Tensor fake = check::random_tensor({3, 24, 8, 8}, rng);
  const auto r = critic_loss(constant_critic(4.2), real, fake, labels_for(3), {0.1, 0.5, 0.9}, 0.0);
  EXPECT_EQ(r.loss.item(), 0.0);
}

TEST(CriticLoss, UnitLinearCriticHasZeroPenalty) {
  std::mt19937_64 rng(2);
  const Tensor w = unit_vector(rng);
  const Tensor real = check::random_tensor({4, 24, 8, 8}, rng);
  const Tensor fake = check::random_tensor({4, 24, 8, 8}, rng);
  const auto r = critic_loss(linear_critic(w), real, fake, labels_for(4), {0.2, 0.4, 0.6, 0.8}, 1.0);
  double expected = 0.0;
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t i = 0; i < kSample; ++i) expected += w[i] * (fake[n * kSample + i] - real[n * kSample + i]) / 4.0;
  EXPECT_NEAR(r.penalty, 0.0, 1e-12);
  EXPECT_NEAR(r.mean_grad_norm, 1.0, 1e-12);
  EXPECT_NEAR(r.loss.item(), expected, 1e-12);
}

TEST(CriticLoss, ScaledLinearCriticPenaltyIsClosedForm) {
  std::mt19937_64 rng(3);
  const Tensor w = scale(unit_vector(rng), 3.0);
  const Tensor x = check::random_tensor({2, 24, 8, 8}, rng);
  const auto r = critic_loss(linear_critic(w), x, x, labels_for(2), {0.3, 0.7}, 2.5);
  EXPECT_NEAR(r.penalty, 4.0, 1e-10);
  EXPECT_NEAR(r.loss.item(), 10.0, 1e-10);
}

TEST(CriticLoss, SpatialFormMatchesScalarRecomputation) {
  std::mt19937_64 rng(4);
  const TinyCritic c = make_tiny(rng, false);
  const Tensor real = check::random_tensor({2, 24, 8, 8}, rng);
  const Tensor fake = check::random_tensor({2, 24, 8, 8}, rng);
  const std::vector<double> u{0.31, 0.77};
  const auto r = critic_loss(c.as_fn(), real, fake, labels_for(2), u, 1.0);
  EXPECT_NEAR(r.loss.item(), c.loss(real, fake, u, 1.0), 1e-6);
}

TEST(CriticLoss, TemporalFormMatchesScalarRecomputation) {
  std::mt19937_64 rng(5);
  const TinyCritic c = make_tiny(rng, true);
  const Tensor real = check::random_tensor({2, 24, 8, 8}, rng);
  const Tensor fake = check::random_tensor({2, 24, 8, 8}, rng);
  const std::vector<double> u{0.12, 0.64};
  const auto r = critic_loss(c.as_fn(), real, fake, labels_for(2), u, 1.0);
  EXPECT_NEAR(r.loss.item(), c.loss(real, fake, u, 1.0), 1e-6);
}

TEST(CriticLoss, PenaltyGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const Tensor x = check::random_tensor({2, 24, 8, 8}, rng);
  const Tensor y = check::random_tensor({2, 24, 8, 8}, rng);
  const Tensor lbl = labels_for(2);
  const Tensor W0 = check::random_tensor({3, kSample}, rng, -0.05, 0.05);
  const Tensor v0 = check::random_tensor({3, 1}, rng);
  const auto f = [&](const std::vector<Tensor>& p) {
    const CriticFn d = [&](const Tensor& in, const Tensor&) { return matmul(tanh(matmul(flatten(in), p[0], false, true)), p[1]); };
    return critic_loss(d, x, y, lbl, {0.4, 0.9}, 1.0).loss;
  };
  EXPECT_LT(check::gradcheck(f, {W0, v0}, 1e-5), 1e-4);
}

TEST(LossDSpatial, ImprovedSeparationLowersTheLoss) {
  std::mt19937_64 rng(7);
  const Tensor w = unit_vector(rng);
  const Tensor real = check::random_tensor({3, 24, 8, 8}, rng);
  const Tensor fake = check::random_tensor({3, 24, 8, 8}, rng);
  const std::vector<double> u{0.5, 0.5, 0.5};
  const double base = critic_loss(linear_critic(w), real, fake, labels_for(3), u, 0.0).loss.item();
  // Shift real along +w and fake along -w: scores separate further.
  const Tensor shift = reshape(expand(Tensor::scalar(1.0), {3, 1}), {3, 1});
  const Tensor dir = matmul(shift, reshape(w, {1, kSample}));
  const Tensor real2 = add(real, reshape(dir, {3, 24, 8, 8}));
  const Tensor fake2 = sub(fake, reshape(dir, {3, 24, 8, 8}));
  const double better = critic_loss(linear_critic(w), real2, fake2, labels_for(3), u, 0.0).loss.item();
  EXPECT_LT(better, base);
  EXPECT_NEAR(better, base - 2.0, 1e-10);
}

TEST(LossDSpatial, UsesTheSpatialCritic) {
  SpatialCritic d(NetConfig::toy().spatial, 3);
  std::mt19937_64 rng(8);
  const Tensor real = check::random_tensor({2, 24, 8, 8}, rng);
  const Tensor fake = check::random_tensor({2, 24, 8, 8}, rng);
  LossConfig cfg;
  cfg.lambda_gp = 0.0;
  const Tensor lbl = labels_for(2);
  const auto r = loss_d_spatial(d, real, fake, lbl, {0.5, 0.5}, cfg);
  const double expected = (sum(d.forward(fake, lbl)).item() - sum(d.forward(real, lbl)).item()) / 2.0;
  EXPECT_NEAR(r.loss.item(), expected, 1e-12);
}

TEST(LossDTemporal, IdenticalBatchesGiveZero) {
  TemporalCritic d(NetConfig::toy().temporal, 3);
  std::mt19937_64 rng(9);
  const Tensor real = check::random_tensor({2, 24, 8, 8}, rng);
  LossConfig cfg;
  cfg.lambda_gp = 0.0;
  EXPECT_EQ(loss_d_temporal(d, real, real, labels_for(2), {0.2, 0.8}, cfg).loss.item(), 0.0);
}

TEST(LossDTemporal, ConstantOffsetGivesZero) {
  TemporalCritic d(NetConfig::toy().temporal, 3);
  std::mt19937_64 rng(10);
  const Tensor real = check::random_tensor({3, 24, 8, 8}, rng);
  LossConfig cfg;
  cfg.lambda_gp = 0.0;
  const auto r = loss_d_temporal(d, real, add_scalar(real, 7.5), labels_for(3), {0.2, 0.5, 0.8}, cfg);
  EXPECT_NEAR(r.loss.item(), 0.0, 1e-6);
}

TEST(LossDTemporal, PenaltyIsTakenOnTheTwentyFourFrameInput) {
  // With a linear critic on hourly differences, grad_x = D^T w, whose norm
  // differs from ||w||; the recomputation oracle fixes the convention.
  std::mt19937_64 rng(11);
  TinyCritic c = make_tiny(rng, true);
  const Tensor real = check::random_tensor({1, 24, 8, 8}, rng);
  const Tensor fake = check::random_tensor({1, 24, 8, 8}, rng);
  const auto r = critic_loss(c.as_fn(), real, fake, labels_for(1), {0.5}, 3.0);
  EXPECT_NEAR(r.loss.item(), c.loss(real, fake, {0.5}, 3.0), 1e-6);
}

// --- generator losses -----------------------------------------------------------

Tensor tracked_fake(std::size_t n, std::mt19937_64& rng) {
  Tensor f = check::random_tensor({n, 24, 8, 8}, rng);
  f.set_requires_grad(true);
  return f;
}

TEST(LossG, ZeroCriticsGiveZero) {
  std::mt19937_64 rng(12);
  EXPECT_EQ(loss_g(constant_critic(0.0), constant_critic(0.0), tracked_fake(2, rng), labels_for(2)).item(), 0.0);
}

TEST(LossG, ConstantCriticsGiveNegatedSum) {
  std::mt19937_64 rng(13);
  EXPECT_DOUBLE_EQ(loss_g(constant_critic(1.5), constant_critic(-4.0), tracked_fake(2, rng), labels_for(2)).item(),
                   -1.5 + 4.0);
}

TEST(LossG, DetachedFakeIsRejected) {
  std::mt19937_64 rng(14);
  const Tensor fake = check::random_tensor({2, 24, 8, 8}, rng);
  EXPECT_THROW(loss_g(constant_critic(0.0), constant_critic(0.0), fake, labels_for(2)), Error);
  LossConfig cfg;
  cfg.variant = LossVariant::ex_wgan_tgp;
  EXPECT_THROW(loss_g_tgp(constant_critic(0.0), fake, labels_for(2), cfg), Error);
}

TEST(LossG, GeneratorParameterGradientsMatchFiniteDifferences) {
  const NetConfig toy = NetConfig::toy();
  Generator g(toy.generator, 21);
  SpatialCritic ds(toy.spatial, 22);
  TemporalCritic dt(toy.temporal, 23);
  std::mt19937_64 rng(24);
  const std::size_t n = 3;
  const Tensor z = check::random_tensor({n, kNoiseDim}, rng, -2, 2);
  // Nonzero period and region inputs keep zero-initialised embedding biases
  // off the activation kink, where central differences average two slopes.
  const Tensor lbl = label_tensor({{2, {1, 2}, {1}}, {7, {2, 1}, {2}}, {11, {3, 3}, {3}}});
  const auto objective = [&] { return loss_g(ds, dt, g.forward(z, lbl, true), lbl); };

  g.params().zero_grad();
  objective().backward();

  // Probe a handful of entries in every generator tensor.
  std::vector<double> analytic, numeric;
  const double eps = 1e-5;
  for (auto& [name, t] : g.params().parameters()) {
    auto data = t.mutable_data();
    const auto gr = t.grad().data();
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    for (int k = 0; k < 4; ++k) {
      const std::size_t j = pick(rng);
      const double saved = data[j];
      data[j] = saved + eps;
      const double up = objective().item();
      data[j] = saved - eps;
      const double down = objective().item();
      data[j] = saved;
      analytic.push_back(gr[j]);
      numeric.push_back((up - down) / (2 * eps));
    }
  }
  EXPECT_LT(check::relative_error(analytic, numeric), 1e-4);
}

TEST(LossGTgp, TemporallyConstantFakeHasNoPenalty) {
  Tensor fake = Tensor::full({2, 24, 8, 8}, 3.0);
  fake.set_requires_grad(true);
  LossConfig cfg;
  cfg.variant = LossVariant::ex_wgan_tgp;
  cfg.lambda_tp = 5.0;
  const Tensor loss = loss_g_tgp(constant_critic(2.0), fake, labels_for(2), cfg);
  EXPECT_DOUBLE_EQ(loss.item(), -2.0);
  // Zero rows take the zero subgradient; no NaN reaches the generator.
  const auto gr = grad(loss, {fake});
  for (double v : gr[0].data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(LossGTgp, ZeroWeightReducesToSingleCriticLoss) {
  SpatialCritic d(NetConfig::toy().spatial, 5);
  std::mt19937_64 rng(15);
  const Tensor fake = tracked_fake(3, rng);
  const Tensor lbl = labels_for(3);
  LossConfig cfg;
  cfg.variant = LossVariant::ex_wgan_tgp;
  EXPECT_DOUBLE_EQ(loss_g_tgp(d, fake, lbl, cfg).item(), -mean(d.forward(fake, lbl)).item());
}

TEST(LossGTgp, RampPenaltyIsFrobeniusNorm) {
  std::vector<double> v(2 * kSample);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 24; ++t)
      for (std::size_t p = 0; p < 64; ++p) v[n * kSample + t * 64 + p] = double(t);
  Tensor fake = Tensor::from({2, 24, 8, 8}, v);
  fake.set_requires_grad(true);
  LossConfig cfg;
  cfg.variant = LossVariant::ex_wgan_tgp;
  cfg.lambda_tp = 0.5;
  const double loss = loss_g_tgp(constant_critic(0.0), fake, labels_for(2), cfg).item();
  EXPECT_NEAR(loss, 0.5 * std::sqrt(23.0 * 64.0), 1e-12);
  EXPECT_NEAR(std::sqrt(23.0 * 64.0), 38.367, 1e-3);
}

TEST(LossConfig, NegativeWeightsAreRejected) {
  LossConfig cfg;
  cfg.lambda_gp = -1.0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg.lambda_gp = 0.0;
  cfg.lambda_tp = -0.1;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg.lambda_tp = 0.0;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(LossConfig, VariantNamesRoundTrip) {
  for (auto v : {LossVariant::dual_critic, LossVariant::ex_wgan_tgp}) EXPECT_EQ(parse_loss_variant(to_string(v)), v);
  EXPECT_THROW(parse_loss_variant("wgan"), UsageError);
}

}  // namespace
