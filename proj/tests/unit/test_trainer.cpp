#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <iterator>

#include "gradcheck.hpp"
#include "temp_dir.hpp"
#include "tempgen/error.hpp"
#include "tempgen/synthetic.hpp"
#include "tempgen/trainer.hpp"

using namespace tempgen;
namespace fs = std::filesystem;

namespace {

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// --- Adam ------------------------------------------------------------------------

// Textbook Adam on one scalar, with bias corrections tracked as running
// products of the betas.
struct ScalarAdam {
  double b1, b2, eps, lr;
  double m = 0, v = 0, p1 = 1, p2 = 1;
  double step(double theta, double g) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    p1 *= b1;
    p2 *= b2;
    return theta - lr * (m / (1 - p1)) / (std::sqrt(v / (1 - p2)) + eps);
  }
};

ParameterSet scalar_param(double value) {
  ParameterSet p;
  p.add("theta", Tensor::from({1}, {value}));
  return p;
}

void set_grad(ParameterSet& p, double g) {
  // d(g * theta)/d(theta) = g.
  p.zero_grad();
  scale(sum(p.at("theta")), g).backward();
}

TEST(Adam, ZeroGradientLeavesParametersAndMomentsUnchanged) {
  ParameterSet p = scalar_param(0.7);
  AdamState s;
  set_grad(p, 0.0);
  EXPECT_EQ(adam_step(p, s, 0.1), StepOutcome::applied);
  EXPECT_EQ(p.at("theta")[0], 0.7);
  EXPECT_EQ(s.m.at("theta")[0], 0.0);
  EXPECT_EQ(s.v.at("theta")[0], 0.0);
}

TEST(Adam, FirstStepIsLearningRateSized) {
  ParameterSet p = scalar_param(0.0);
  AdamState s;
  set_grad(p, 1.0);
  adam_step(p, s, 0.1);
  EXPECT_NEAR(p.at("theta")[0], -0.1, 1e-8);
}

TEST(Adam, TenStepsMatchScalarReference) {
  const double grads[] = {1.0, 0.5, -0.3, 2.0, 1.0, 1.0, -1.5, 0.2, 0.0, 0.9};
  for (double beta1 : {0.5, 0.0}) {
    ParameterSet p = scalar_param(0.25);
    AdamState s;
    const AdamConfig cfg{beta1, 0.99, 1e-8};
    ScalarAdam ref{beta1 == 0.0 ? 0.0 : beta1, 0.99, 1e-8, 0.1};
    double theta = 0.25;
    for (double g : grads) {
      set_grad(p, g);
      adam_step(p, s, 0.1, cfg);
      theta = ref.step(theta, g);
      EXPECT_NEAR(p.at("theta")[0], theta, 1e-12) << "beta1 " << beta1;
    }
  }
}

TEST(Adam, BetaOneZeroIsBiasCorrectedRmsProp) {
  double m = 0, v = 0;
  const AdamConfig cfg{0.0, 0.99, 1e-8};
  double v_ref = 0;
  for (long t = 1; t <= 5; ++t) {
    const double g = 0.3 * double(t) - 0.7;
    const double delta = adam_update(m, v, g, t, 0.01, cfg);
    v_ref = 0.99 * v_ref + 0.01 * g * g;
    EXPECT_NEAR(delta, -0.01 * g / (std::sqrt(v_ref / (1 - std::pow(0.99, t))) + 1e-8), 1e-15);
  }
}

TEST(Adam, NonFiniteGradientSkipsTheWholeStep) {
  ParameterSet p;
  p.add("a", Tensor::from({2}, {1.0, 2.0}));
  p.add("b", Tensor::from({1}, {3.0}));
  AdamState s;
  p.zero_grad();
  add(sum(p.at("a")), scale(sum(p.at("b")), std::nan(""))).backward();
  EXPECT_EQ(adam_step(p, s, 0.1), StepOutcome::skipped_non_finite);
  EXPECT_EQ(p.at("a")[0], 1.0);
  EXPECT_EQ(p.at("b")[0], 3.0);
  EXPECT_EQ(s.step, 0);
}

TEST(LrSchedule, StepDecayEveryHundredEpochs) {
  EXPECT_EQ(lr_schedule(0, 1e-3, 0.9), 1e-3);
  EXPECT_EQ(lr_schedule(99, 1e-3, 0.9), 1e-3);
  EXPECT_DOUBLE_EQ(lr_schedule(100, 1e-3, 0.9), 0.9e-3);
  EXPECT_DOUBLE_EQ(lr_schedule(250, 1e-3, 0.9), 1e-3 * 0.81);
  EXPECT_THROW(lr_schedule(-1, 1e-3, 0.9), UsageError);
}

// --- config ----------------------------------------------------------------------

TEST(TrainConfig, DefaultsAndValidation) {
  TrainConfig c;
  EXPECT_EQ(c.n_critic, 1);
  EXPECT_EQ(c.lr_g, 1e-4);
  EXPECT_EQ(c.lr_d, 1e-4);
  EXPECT_EQ(c.adam_beta1, 0.5);
  EXPECT_EQ(c.adam_beta2, 0.99);
  EXPECT_EQ(c.lr_decay_gamma, 0.98);
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.adam_beta2 = 1.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.lr_g = 0.0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(TrainConfig, JsonOverlayAndRoundTrip) {
  const TrainConfig c = TrainConfig::from_json(R"({"epochs": 7, "lr": 0.002, "variant": "ex_wgan_tgp",
                                                   "lambda_tp": 0.5, "nets": "toy", "seed": 9})");
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.lr_g, 0.002);
  EXPECT_EQ(c.lr_d, 0.002);
  EXPECT_EQ(c.loss.variant, LossVariant::ex_wgan_tgp);
  EXPECT_EQ(c.loss.lambda_tp, 0.5);
  EXPECT_EQ(c.seed, 9u);
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(TrainConfig::from_json(R"({"epochz": 3})"), UsageError);
  EXPECT_THROW(TrainConfig::from_json(R"({"epochs": "three"})"), UsageError);
  EXPECT_THROW(TrainConfig::from_json("not json"), UsageError);
}

// --- training ----------------------------------------------------------------------

struct Corpus {
  std::vector<SampleBucket> buckets;
  StandardizationStats stats;
};

Corpus corpus(std::size_t per_label) {
  SyntheticConfig sc;
  std::vector<SampleBucket> raw{synthetic_bucket(sc, {1, {1, 1}, {0}}, per_label, 1),
                                synthetic_bucket(sc, {7, {2, 1}, {0}}, per_label, 2)};
  auto [b, s] = standardize(raw);
  return {b, s};
}

TrainConfig quick_config(long epochs, std::size_t batch) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = batch;
  c.seed = 5;
  return c;
}

TEST(Train, OneBatchLogsCriticStepsThenGeneratorStep) {
  const Corpus c = corpus(2);
  for (int n_critic : {1, 3}) {
    TrainConfig cfg = quick_config(1, 4);
    cfg.n_critic = n_critic;
    const auto r = train(c.buckets, c.stats, cfg);
    ASSERT_EQ(r.log.rows.size(), std::size_t(n_critic) + 1);
    EXPECT_EQ(r.log.count(StepKind::critic), std::size_t(n_critic));
    EXPECT_EQ(r.log.count(StepKind::generator), 1u);
    for (int i = 0; i < n_critic; ++i) {
      EXPECT_EQ(r.log.rows[i].kind, StepKind::critic);
      EXPECT_TRUE(r.log.rows[i].loss_ds && r.log.rows[i].loss_dt && r.log.rows[i].gp_s && r.log.rows[i].gp_t);
      EXPECT_EQ(r.log.rows[i].step, i);
    }
    EXPECT_EQ(r.log.rows.back().kind, StepKind::generator);
    EXPECT_TRUE(r.log.rows.back().loss_g.has_value());
    EXPECT_EQ(r.meta.epoch, 1);
    EXPECT_EQ(r.log.epoch_seconds.size(), 1u);
  }
}

TEST(Train, SingleSampleRemainderIsDropped) {
  const Corpus c = corpus(3);  // six samples
  const auto r = train(c.buckets, c.stats, quick_config(1, 5));
  EXPECT_EQ(r.log.count(StepKind::generator), 1u);
  const auto r2 = train(c.buckets, c.stats, quick_config(1, 4));
  EXPECT_EQ(r2.log.count(StepKind::generator), 2u);
}

TEST(Train, SpatialOnlyVariantHasNoTemporalColumns) {
  const Corpus c = corpus(2);
  TrainConfig cfg = quick_config(1, 4);
  cfg.loss.variant = LossVariant::ex_wgan_tgp;
  cfg.loss.lambda_tp = 0.1;
  const auto r = train(c.buckets, c.stats, cfg);
  EXPECT_FALSE(r.log.rows[0].loss_dt.has_value());
  EXPECT_TRUE(r.log.rows[0].loss_ds.has_value());
  const std::string csv = r.log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,epoch,loss_dt,loss_ds,loss_g,gp_t,gp_s,lr");
}

TEST(Train, FixedSeedIsBitIdentical) {
  const Corpus c = corpus(3);
  check::TempDir dir;
  const TrainConfig cfg = quick_config(2, 3);
  const auto a = train(c.buckets, c.stats, cfg);
  const auto b = train(c.buckets, c.stats, cfg);
  EXPECT_EQ(a.log.rows, b.log.rows);
  save_checkpoint(a.generator, a.meta, dir.file("a"));
  save_checkpoint(b.generator, b.meta, dir.file("b"));
  EXPECT_EQ(file_bytes(dir.path() / "a" / "generator.tpar"), file_bytes(dir.path() / "b" / "generator.tpar"));
  EXPECT_EQ(file_bytes(dir.path() / "a" / "model.json"), file_bytes(dir.path() / "b" / "model.json"));

  TrainConfig other = cfg;
  other.seed = 6;
  EXPECT_NE(train(c.buckets, c.stats, other).log.rows, a.log.rows);
}

TEST(Train, InitialGeneratorMatchesTheStartingWeights) {
  const Corpus c = corpus(2);
  TrainConfig cfg = quick_config(1, 4);
  cfg.divergence_limit = 1e-12;  // abort at the first step, restoring the start
  const auto r = train(c.buckets, c.stats, cfg);
  ASSERT_TRUE(r.diverged);
  const Generator init = initial_generator(cfg);
  for (const auto& [name, t] : init.params().parameters()) {
    const auto other = r.generator.params().at(name).data();
    EXPECT_TRUE(std::equal(t.data().begin(), t.data().end(), other.begin())) << name;
  }
}

TEST(Train, DivergenceGuardKeepsLastGoodCheckpoint) {
  const Corpus c = corpus(2);
  check::TempDir dir;
  TrainConfig cfg = quick_config(3, 4);
  cfg.divergence_limit = 1e-12;
  cfg.checkpoint_dir = dir.file("ckpt");
  const auto r = train(c.buckets, c.stats, cfg);
  EXPECT_TRUE(r.diverged);
  EXPECT_NE(r.abort_reason.find("divergence limit"), std::string::npos) << r.abort_reason;
  EXPECT_EQ(r.meta.epoch, 0);
  EXPECT_TRUE(fs::exists(dir.path() / "ckpt" / "last_good" / "generator.tpar"));
  EXPECT_FALSE(r.log.events.empty());
}

TEST(Train, PeriodicCheckpointsAreWritten) {
  const Corpus c = corpus(2);
  check::TempDir dir;
  TrainConfig cfg = quick_config(2, 4);
  cfg.checkpoint_every = 1;
  cfg.checkpoint_dir = dir.file("ckpt");
  train(c.buckets, c.stats, cfg);
  EXPECT_TRUE(fs::exists(dir.path() / "ckpt" / "epoch_1" / "model.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "ckpt" / "epoch_2" / "generator.tpar"));
}

TEST(Train, TooFewSamplesIsRejected) {
  Corpus c = corpus(1);
  c.buckets.pop_back();
  EXPECT_THROW(train(c.buckets, c.stats, quick_config(1, 2)), DataError);
}

// --- checkpoints and sampling ------------------------------------------------------

TEST(Checkpoint, RoundTripPreservesWeightsAndMetadata) {
  const Corpus c = corpus(2);
  check::TempDir dir;
  auto r = train(c.buckets, c.stats, quick_config(1, 4));
  save_checkpoint(r.generator, r.meta, dir.file("ckpt"));
  auto loaded = load_checkpoint(dir.file("ckpt"));
  EXPECT_EQ(loaded.meta.to_json(), r.meta.to_json());
  ASSERT_TRUE(loaded.meta.stats.has_value());
  EXPECT_EQ(loaded.meta.stats->mean, c.stats.mean);
  // Weights are stored as f32; f32-representable values survive exactly.
  for (const auto& [name, t] : r.generator.params().parameters()) {
    const auto back = loaded.generator.params().at(name).data();
    for (std::size_t i = 0; i < t.numel(); ++i) ASSERT_EQ(back[i], double(float(t.data()[i]))) << name;
  }
  save_checkpoint(loaded.generator, loaded.meta, dir.file("again"));
  EXPECT_EQ(file_bytes(dir.path() / "ckpt" / "generator.tpar"), file_bytes(dir.path() / "again" / "generator.tpar"));
}

TEST(Checkpoint, MissingDirectoryIsAnIoError) { EXPECT_THROW(load_checkpoint("/nonexistent/ckpt"), IoError); }

TEST(SampleConditioned, DeterministicKelvinDraws) {
  const Corpus c = corpus(2);
  check::TempDir dir;
  auto r = train(c.buckets, c.stats, quick_config(1, 4));
  save_checkpoint(r.generator, r.meta, dir.file("ckpt"));
  const ConditionLabel label{1, {1, 1}, {0}};
  const auto a = sample_conditioned(dir.file("ckpt"), label, 3, 11);
  const auto b = sample_conditioned(dir.file("ckpt"), label, 3, 11);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, sample_conditioned(dir.file("ckpt"), label, 3, 12));
  for (const auto& s : a) {
    EXPECT_EQ(s.label, label);
    for (double v : s.values) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_TRUE(sample_conditioned(dir.file("ckpt"), label, 0, 11).empty());
  // Kelvin scale: standard units are destandardised with the stored stats.
  const auto direct = generate_samples(r.generator, c.stats, label, 3, 11);
  for (std::size_t i = 0; i < kSampleValues; ++i) EXPECT_NEAR(direct[0].values[i], a[0].values[i], 1e-3);
}

TEST(SampleConditioned, MissingStatsIsAnError) {
  check::TempDir dir;
  CheckpointMeta meta;
  save_checkpoint(Generator(NetConfig::toy().generator, 1), meta, dir.file("ckpt"));
  EXPECT_THROW(sample_conditioned(dir.file("ckpt"), {1, {1, 1}, {0}}, 2, 1), DataError);
}

// --- critic sanity -------------------------------------------------------------------

struct CriticRun {
  double final_loss = 0.0;
  double final_penalty = 0.0;
  double first_penalty = 0.0;
};

using FakeMaker = std::function<Tensor(const Tensor& real, const Tensor& labels, std::mt19937_64& rng)>;

/// Trains one critic alone for `steps` steps; averages the last ten.
template <class Critic, class LossFn>
CriticRun critic_alone(Critic& critic, LossFn&& loss_fn, const FakeMaker& make_fake, int steps) {
  const Corpus c = corpus(16);
  std::vector<TemperatureSample> pool;
  for (const auto& b : c.buckets) pool.insert(pool.end(), b.samples.begin(), b.samples.end());
  std::mt19937_64 rng(4);
  AdamState state;
  const std::size_t n = 8;
  CriticRun out;
  for (int s = 0; s < steps; ++s) {
    std::vector<TemperatureSample> batch;
    std::vector<ConditionLabel> labels;
    for (std::size_t i = 0; i < n; ++i) {
      batch.push_back(pool[(s * n + i) % pool.size()]);
      labels.push_back(batch.back().label);
    }
    const Tensor lbl = label_tensor(labels);
    const Tensor real = sample_tensor(batch);
    const Tensor fake = make_fake(real, lbl, rng);
    std::vector<double> u(n);
    for (auto& x : u) x = std::uniform_real_distribution<double>(0, 1)(rng);
    critic.params().zero_grad();
    const CriticLoss r = loss_fn(critic, real, fake, lbl, u);
    r.loss.backward();
    adam_step(critic.params(), state, 1e-3);
    if (s == 0) out.first_penalty = r.penalty;
    if (s >= steps - 10) out.final_loss += r.loss.item() / 10, out.final_penalty += r.penalty / 10;
  }
  return out;
}

FakeMaker frozen_generator() {
  auto g = std::make_shared<Generator>(NetConfig::toy().generator, 3);
  return [g](const Tensor&, const Tensor& lbl, std::mt19937_64& rng) {
    NoGradGuard guard;
    return g->forward(check::random_tensor({lbl.dim(0), kNoiseDim}, rng), lbl, true);
  };
}

// Fake = real with small independent perturbations: the Wasserstein gain is
// tiny, so the penalty alone sets the critic's gradient norm.
FakeMaker near_copy() {
  return [](const Tensor& real, const Tensor&, std::mt19937_64& rng) {
    return add(real, check::random_tensor(real.shape(), rng, -1e-3, 1e-3));
  };
}

const auto spatial_loss = [](auto& c, auto&&... a) { return loss_d_spatial(c, a..., LossConfig{}); };
const auto temporal_loss = [](auto& c, auto&&... a) { return loss_d_temporal(c, a..., LossConfig{}); };

TEST(CriticSanity, SpatialCriticSeparatesFrozenGenerator) {
  SpatialCritic d(NetConfig::toy().spatial, 7);
  EXPECT_LT(critic_alone(d, spatial_loss, frozen_generator(), 200).final_loss, 0.0);
}

TEST(CriticSanity, TemporalCriticSeparatesFrozenGenerator) {
  TemporalCritic d(NetConfig::toy().temporal, 8);
  EXPECT_LT(critic_alone(d, temporal_loss, frozen_generator(), 200).final_loss, 0.0);
}

TEST(CriticSanity, PenaltyDrivesGradientNormToOne) {
  SpatialCritic ds(NetConfig::toy().spatial, 7);
  TemporalCritic dt(NetConfig::toy().temporal, 8);
  const auto rs = critic_alone(ds, spatial_loss, near_copy(), 200);
  const auto rt = critic_alone(dt, temporal_loss, near_copy(), 200);
  EXPECT_GT(rs.first_penalty, 0.1);
  EXPECT_LT(rs.final_penalty, 0.1);
  EXPECT_LT(rt.final_penalty, 0.1);
  EXPECT_LT(rt.final_penalty, rt.first_penalty);
}

}  // namespace
