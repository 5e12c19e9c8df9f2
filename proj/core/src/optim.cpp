#include "tempgen/optim.hpp"

#include <cmath>

#include "tempgen/error.hpp"

namespace tempgen {

double adam_update(double& m, double& v, double g, long t, double lr, const AdamConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  const double m_hat = m / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const double v_hat = v / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  return -lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
}

StepOutcome adam_step(ParameterSet& params, AdamState& state, double lr, const AdamConfig& cfg) {
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  for (const auto& [name, p] : params.parameters()) {
    const Tensor g = p.grad();
    if (!g.defined()) continue;
    for (double x : g.data()) {
      if (!std::isfinite(x)) return StepOutcome::skipped_non_finite;
    }
  }
  const long t = ++state.step;
  for (auto& [name, p] : params.parameters()) {
    const Tensor g = p.grad();
    if (!g.defined()) continue;
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(p.numel(), 0.0);
      v.assign(p.numel(), 0.0);
    }
    auto w = p.mutable_data();
    const auto gd = g.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += adam_update(m[i], v[i], gd[i], t, lr, cfg);
  }
  return StepOutcome::applied;
}

double lr_schedule(long epoch, double base_lr, double gamma) {
  if (epoch < 0) throw UsageError("epoch must be non-negative");
  return base_lr * std::pow(gamma, static_cast<double>(epoch / 100));
}

}  // namespace tempgen
