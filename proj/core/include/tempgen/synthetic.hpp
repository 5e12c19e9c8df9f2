#pragma once

// Desk-scale diurnal temperature corpus:
//   T = base(M, k) + A(M) sin(2 pi (h - phi(R)) / 24) + lapse (col + row) + d + e
// with a per-day anomaly d ~ N(0, day_sigma^2) shared by every cell and
// white noise e ~ N(0, noise_sigma^2) per cell and hour. col and row are
// absolute cell indices from the grid's SW corner.

#include <cstdint>

#include "tempgen/grid_store.hpp"

namespace tempgen {

struct SyntheticConfig {
  int base_year = 1979;
  double lapse = 0.25;       // K per cell step
  double day_sigma = 1.5;    // K
  double noise_sigma = 0.2;  // K
  std::uint64_t seed = 7;
};

double synthetic_base(unsigned month, int period_k);
double synthetic_amplitude(unsigned month);
/// Hour of the diurnal minimum crossing for region (x, y).
double synthetic_phase(const RegionIndex& region);

/// Complete hourly grid covering calendar years [first_year, first_year + years).
GridDataset synthetic_grid(const SyntheticConfig& cfg, std::uint32_t width, std::uint32_t height, int first_year,
                           int years);

/// `n` days drawn directly for one label (no calendar).
SampleBucket synthetic_bucket(const SyntheticConfig& cfg, const ConditionLabel& label, std::size_t n,
                              std::uint64_t seed);

}  // namespace tempgen
