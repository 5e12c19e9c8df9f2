#include "tempgen/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "tempgen/error.hpp"

namespace tempgen {

namespace {

double diurnal(unsigned month, const RegionIndex& region, double hour) {
  return synthetic_amplitude(month) * std::sin(2.0 * std::numbers::pi * (hour - synthetic_phase(region)) / 24.0);
}

}  // namespace

double synthetic_base(unsigned month, int period_k) {
  return 282.0 - 9.0 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(month) - 1.0) / 12.0) +
         0.4 * period_k;
}

double synthetic_amplitude(unsigned month) {
  return 4.0 + 2.0 * std::sin(2.0 * std::numbers::pi * (static_cast<double>(month) - 4.0) / 12.0);
}

double synthetic_phase(const RegionIndex& region) { return 9.0 + 1.5 * (region.x - 1) + 0.75 * (region.y - 1); }

GridDataset synthetic_grid(const SyntheticConfig& cfg, std::uint32_t width, std::uint32_t height, int first_year,
                           int years) {
  if (width == 0 || height == 0 || years < 1) throw UsageError("synthetic grid needs positive extents");
  GridDataset ds;
  ds.origin_lon = -100.0;
  ds.origin_lat = 35.0;
  ds.width = width;
  ds.height = height;
  ds.start_time = to_epoch_hour(first_year, 1, 1);
  ds.n_hours = static_cast<std::uint32_t>(to_epoch_hour(first_year + years, 1, 1) - ds.start_time);
  ds.values.resize(ds.cells() * ds.n_hours);
  ds.missing.assign(ds.cells(), false);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> day_noise(0.0, cfg.day_sigma);
  std::normal_distribution<double> cell_noise(0.0, cfg.noise_sigma);
  double anomaly = 0.0;
  for (std::uint32_t h = 0; h < ds.n_hours; ++h) {
    const CivilHour civil = to_civil(ds.start_time + h);
    if (civil.hour == 0) anomaly = day_noise(rng);
    const int k = PeriodIndex::of_year(civil.year, cfg.base_year).k;
    const double base = synthetic_base(civil.month, k);
    for (std::uint32_t row = 0; row < height; ++row) {
      for (std::uint32_t col = 0; col < width; ++col) {
        const RegionIndex region{static_cast<int>(col / kRegionCells) + 1, static_cast<int>(row / kRegionCells) + 1};
        const double t = base + diurnal(civil.month, region, civil.hour) + cfg.lapse * (col + row) + anomaly +
                         cell_noise(rng);
        ds.values[ds.index(h, row, col)] = static_cast<float>(t);
      }
    }
  }
  return ds;
}

SampleBucket synthetic_bucket(const SyntheticConfig& cfg, const ConditionLabel& label, std::size_t n,
                              std::uint64_t seed) {
  SampleBucket bucket;
  bucket.label = label;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> day_noise(0.0, cfg.day_sigma);
  std::normal_distribution<double> cell_noise(0.0, cfg.noise_sigma);
  const double base = synthetic_base(label.month, label.period.k);
  const int col0 = (label.region.x - 1) * static_cast<int>(kRegionCells);
  const int row0 = (label.region.y - 1) * static_cast<int>(kRegionCells);
  for (std::size_t d = 0; d < n; ++d) {
    TemperatureSample s;
    s.label = label;
    const double anomaly = day_noise(rng);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      const double cycle = diurnal(label.month, label.region, static_cast<double>(h));
      for (std::size_t r = 0; r < kRegionCells; ++r) {
        for (std::size_t c = 0; c < kRegionCells; ++c) {
          s.at(h, r, c) = base + cycle + cfg.lapse * static_cast<double>(col0 + row0 + static_cast<int>(c + r)) +
                          anomaly + cell_noise(rng);
        }
      }
    }
    bucket.samples.push_back(std::move(s));
  }
  return bucket;
}

}  // namespace tempgen
