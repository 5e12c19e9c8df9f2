#pragma once

#include <map>
#include <string>
#include <vector>

#include "tempgen/parameters.hpp"

namespace tempgen {

struct AdamConfig {
  double beta1 = 0.5;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// First and second moments per parameter name, plus the step counter.
struct AdamState {
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
  long step = 0;
};

/// Result of one optimizer step.
enum class StepOutcome { applied, skipped_non_finite };

/// One bias-corrected Adam update over every parameter holding a gradient.
/// A non-finite gradient anywhere leaves parameters and state untouched.
StepOutcome adam_step(ParameterSet& params, AdamState& state, double lr, const AdamConfig& cfg = {});

/// Scalar form used by tests and by adam_step's inner loop.
double adam_update(double& m, double& v, double g, long t, double lr, const AdamConfig& cfg);

/// base_lr * gamma^floor(epoch / 100).
double lr_schedule(long epoch, double base_lr, double gamma);

}  // namespace tempgen
