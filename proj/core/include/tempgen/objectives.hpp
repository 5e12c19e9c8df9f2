#pragma once

// Wasserstein critic and generator objectives with the interpolation-based
// gradient penalty, plus the single-critic temporal-gradient-penalty variant.

#include <functional>
#include <string>
#include <vector>

#include "tempgen/grid_store.hpp"
#include "tempgen/nets.hpp"
#include "tempgen/tensor.hpp"

namespace tempgen {

enum class LossVariant {
  dual_critic,  // spatial + temporal critics
  ex_wgan_tgp,  // spatial critic only, generator pays lambda_tp * ||dT/dt||_F
};

std::string to_string(LossVariant v);
LossVariant parse_loss_variant(const std::string& s);

struct LossConfig {
  double lambda_gp = 1.0;
  double lambda_tp = 0.0;
  LossVariant variant = LossVariant::dual_critic;

  /// Throws UsageError on negative weights.
  void validate() const;
};

/// (T[t+1] - T[t]) / 1h for every pixel: 23 frames of 8x8, hour-major.
std::vector<double> temporal_gradients(const TemperatureSample& sample);

/// u[n] * real[n] + (1 - u[n]) * fake[n]; one u per sample pair.
Tensor gp_interpolate(const Tensor& real, const Tensor& fake, const std::vector<double>& u);

using CriticFn = std::function<Tensor(const Tensor& x, const Tensor& labels)>;

struct CriticLoss {
  Tensor loss;                   // scalar, differentiable w.r.t. critic parameters
  double mean_fake = 0.0;        // E[D(fake)]
  double mean_real = 0.0;        // E[D(real)]
  double penalty = 0.0;          // E[(||grad D(x_hat)|| - 1)^2], unweighted
  double mean_grad_norm = 0.0;   // E[||grad D(x_hat)||]
};

/// E[D(fake)] - E[D(real)] + lambda_gp * E[(||grad_x D(x_hat)||_2 - 1)^2].
/// The norm runs over each sample's full input; x_hat uses `u`.
CriticLoss critic_loss(const CriticFn& critic, const Tensor& real, const Tensor& fake, const Tensor& labels,
                       const std::vector<double>& u, double lambda_gp);

CriticLoss loss_d_spatial(const SpatialCritic& critic, const Tensor& real, const Tensor& fake,
                          const Tensor& labels, const std::vector<double>& u, const LossConfig& cfg);
/// Penalty gradient is taken w.r.t. the 24-frame interpolate fed to the
/// critic (before its differencing stage).
CriticLoss loss_d_temporal(const TemporalCritic& critic, const Tensor& real, const Tensor& fake,
                           const Tensor& labels, const std::vector<double>& u, const LossConfig& cfg);

/// -E[D_s(fake)] - E[D_t(fake)]. `fake` must carry history back to the
/// generator; a detached batch is rejected.
Tensor loss_g(const CriticFn& spatial, const CriticFn& temporal, const Tensor& fake, const Tensor& labels);
Tensor loss_g(const SpatialCritic& spatial, const TemporalCritic& temporal, const Tensor& fake,
              const Tensor& labels);

/// -E[D(fake)] + lambda_tp * E_n ||(T[t+1] - T[t]) / 1h||_F.
Tensor loss_g_tgp(const CriticFn& critic, const Tensor& fake, const Tensor& labels, const LossConfig& cfg);
Tensor loss_g_tgp(const SpatialCritic& critic, const Tensor& fake, const Tensor& labels, const LossConfig& cfg);

CriticFn as_critic(const SpatialCritic& c);
CriticFn as_critic(const TemporalCritic& c);

}  // namespace tempgen
