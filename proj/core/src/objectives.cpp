#include "tempgen/objectives.hpp"

#include "tempgen/error.hpp"

namespace tempgen {

std::string to_string(LossVariant v) {
  return v == LossVariant::dual_critic ? "dual_critic" : "ex_wgan_tgp";
}

LossVariant parse_loss_variant(const std::string& s) {
  if (s == "dual_critic") return LossVariant::dual_critic;
  if (s == "ex_wgan_tgp") return LossVariant::ex_wgan_tgp;
  throw UsageError("unknown loss variant '" + s + "' (expected dual_critic or ex_wgan_tgp)");
}

void LossConfig::validate() const {
  if (!(lambda_gp >= 0.0)) throw UsageError("lambda_gp must be non-negative");
  if (!(lambda_tp >= 0.0)) throw UsageError("lambda_tp must be non-negative");
}

std::vector<double> temporal_gradients(const TemperatureSample& sample) {
  if (sample.values.size() != kSampleValues) {
    throw ShapeError("temporal_gradients: expected 24 frames of 8x8, got " +
                     std::to_string(sample.values.size()) + " values");
  }
  std::vector<double> out((kHoursPerDay - 1) * kPixelsPerFrame);
  for (std::size_t t = 0; t + 1 < kHoursPerDay; ++t) {
    for (std::size_t p = 0; p < kPixelsPerFrame; ++p) {
      out[t * kPixelsPerFrame + p] =
          sample.values[(t + 1) * kPixelsPerFrame + p] - sample.values[t * kPixelsPerFrame + p];
    }
  }
  return out;
}

Tensor gp_interpolate(const Tensor& real, const Tensor& fake, const std::vector<double>& u) {
  if (real.shape() != fake.shape()) {
    throw ShapeError("gp_interpolate: real " + to_string(real.shape()) + " vs fake " + to_string(fake.shape()));
  }
  if (real.rank() == 0 || u.size() != real.dim(0)) {
    throw ShapeError("gp_interpolate: need one u per sample pair");
  }
  const std::size_t n = real.dim(0);
  const std::size_t inner = n ? real.numel() / n : 0;
  const auto r = real.data();
  const auto f = fake.data();
  std::vector<double> out(real.numel());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) throw UsageError("gp_interpolate: u must lie in [0, 1]");
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t k = i * inner + j;
      out[k] = u[i] * r[k] + (1.0 - u[i]) * f[k];
    }
  }
  return Tensor::from(real.shape(), std::move(out));
}

CriticLoss critic_loss(const CriticFn& critic, const Tensor& real, const Tensor& fake, const Tensor& labels,
                       const std::vector<double>& u, double lambda_gp) {
  if (real.shape() != fake.shape()) {
    throw ShapeError("critic loss: real " + to_string(real.shape()) + " vs fake " + to_string(fake.shape()));
  }
  CriticLoss out;
  const Tensor fake_term = mean(critic(fake, labels));
  const Tensor real_term = mean(critic(real, labels));
  out.mean_fake = fake_term.item();
  out.mean_real = real_term.item();
  Tensor loss = sub(fake_term, real_term);

  Tensor x_hat = gp_interpolate(real.detach(), fake.detach(), u);
  x_hat.set_requires_grad(true);
  const Tensor scores = critic(x_hat, labels);
  const Tensor g = grad(sum(scores), {x_hat}, /*create_graph=*/true).front();
  const Tensor norms = row_norm(g);
  const Tensor penalty = mean(square(add_scalar(norms, -1.0)));
  out.penalty = penalty.item();
  out.mean_grad_norm = mean(norms.detach()).item();
  if (lambda_gp != 0.0) loss = add(loss, scale(penalty, lambda_gp));
  out.loss = loss;
  return out;
}

CriticFn as_critic(const SpatialCritic& c) {
  return [&c](const Tensor& x, const Tensor& labels) { return c.forward(x, labels); };
}

CriticFn as_critic(const TemporalCritic& c) {
  return [&c](const Tensor& x, const Tensor& labels) { return c.forward(x, labels); };
}

CriticLoss loss_d_spatial(const SpatialCritic& critic, const Tensor& real, const Tensor& fake,
                          const Tensor& labels, const std::vector<double>& u, const LossConfig& cfg) {
  cfg.validate();
  return critic_loss(as_critic(critic), real, fake, labels, u, cfg.lambda_gp);
}

CriticLoss loss_d_temporal(const TemporalCritic& critic, const Tensor& real, const Tensor& fake,
                           const Tensor& labels, const std::vector<double>& u, const LossConfig& cfg) {
  cfg.validate();
  return critic_loss(as_critic(critic), real, fake, labels, u, cfg.lambda_gp);
}

namespace {
void require_attached(const Tensor& fake) {
  if (!fake.requires_grad()) {
    throw Error("generator loss: fake batch is detached from the generator (no gradient would flow)");
  }
}
}  // namespace

Tensor loss_g(const CriticFn& spatial, const CriticFn& temporal, const Tensor& fake, const Tensor& labels) {
  require_attached(fake);
  return sub(neg(mean(spatial(fake, labels))), mean(temporal(fake, labels)));
}

Tensor loss_g(const SpatialCritic& spatial, const TemporalCritic& temporal, const Tensor& fake,
              const Tensor& labels) {
  return loss_g(as_critic(spatial), as_critic(temporal), fake, labels);
}

Tensor loss_g_tgp(const CriticFn& critic, const Tensor& fake, const Tensor& labels, const LossConfig& cfg) {
  cfg.validate();
  require_attached(fake);
  Tensor loss = neg(mean(critic(fake, labels)));
  if (cfg.lambda_tp != 0.0) {
    loss = add(loss, scale(mean(row_norm(hourly_differences(fake))), cfg.lambda_tp));
  }
  return loss;
}

Tensor loss_g_tgp(const SpatialCritic& critic, const Tensor& fake, const Tensor& labels, const LossConfig& cfg) {
  return loss_g_tgp(as_critic(critic), fake, labels, cfg);
}

}  // namespace tempgen
