#pragma once

// Per-hour Gaussian baseline: every pixel at hour t is drawn i.i.d. from
// N(mu[t], sigma[t]), so it carries the diurnal cycle but no spatial
// structure.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tempgen/grid_store.hpp"

namespace tempgen {

struct HourlyGaussianModel {
  std::array<double, kHoursPerDay> mu{};
  std::array<double, kHoursPerDay> sigma{};
  ConditionLabel label;

  std::string to_json() const;
  static HourlyGaussianModel from_json(const std::string& text);
};

/// Mean and population std over all samples and all 64 pixels per hour.
HourlyGaussianModel fit_baseline(const SampleBucket& bucket);
std::vector<TemperatureSample> sample_baseline(const HourlyGaussianModel& model, std::size_t n, std::uint64_t seed);

}  // namespace tempgen
