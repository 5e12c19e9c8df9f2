#pragma once

// Evaluation metrics comparing generated and ground-truth corpora.

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "tempgen/grid_store.hpp"

namespace tempgen {

/// Pearson correlation over `n` variables; zero-variance variables are
/// masked (row and column invalid, entries 0).
struct CorrelationMatrix {
  std::size_t n = 0;
  std::vector<double> rho;  // row-major n x n
  std::vector<bool> valid;

  double at(std::size_t i, std::size_t j) const { return rho[i * n + j]; }
  std::size_t valid_count() const;
};

/// `observations` is row-major (n_obs x n_vars). Needs at least 2 rows.
CorrelationMatrix pearson_matrix(std::span<const double> observations, std::size_t n_vars);
/// Every hour frame of every sample is one observation of the 64 pixels.
CorrelationMatrix ppcc_matrix(const std::vector<TemperatureSample>& samples);

/// (1/N) max_j sum_i |rho_g(i,j) - rho_r(i,j)| over the N valid variables.
/// Masks must agree; range [0, 2].
double spacd(const CorrelationMatrix& real, const CorrelationMatrix& gen);
double spacd(const std::vector<TemperatureSample>& real, const std::vector<TemperatureSample>& gen);

struct FdtdResult {
  double value = 0.0;
  double mu_r = 0.0, sigma_r = 0.0;
  double mu_g = 0.0, sigma_g = 0.0;
  std::size_t bulk_r = 0, bulk_g = 0;
};

inline constexpr double kFdtdLowPercentile = 10.0;
inline constexpr double kFdtdHighPercentile = 90.0;

/// sqrt((mu_r - mu_g)^2 + (sigma_r - sigma_g)^2).
double frechet_gaussian_1d(double mu_r, double sigma_r, double mu_g, double sigma_g);
/// Each corpus keeps the values inside its own [lo, hi] percentile range;
/// a Gaussian (mean, population std) is fitted to each bulk.
FdtdResult fdtd(std::span<const double> real_daily_means, std::span<const double> gen_daily_means,
                double lo_percentile = kFdtdLowPercentile, double hi_percentile = kFdtdHighPercentile);
/// Mean over all 24x8x8 values of each sample.
std::vector<double> daily_means(const std::vector<TemperatureSample>& samples);

/// Natural-log Jensen-Shannon divergence; 0 ln 0 = 0.
double js_divergence(std::span<const double> p, std::span<const double> q);

struct TgddResult {
  double value = 0.0;
  std::size_t requested_bins = 0;
  std::size_t effective_bins = 0;  // after merging tied edges
  std::vector<double> edges;       // effective_bins + 1 entries
  std::vector<double> p;           // real mass per bin
  std::vector<double> q;           // generated mass per bin
};

/// Bins are the n-quantiles of the pooled values; bin i holds
/// [edge_i, edge_i+1), the last bin is closed. Each bin contributes the JS
/// divergence of (p_i, 1 - p_i) against (q_i, 1 - q_i); the result is their
/// mean.
TgddResult tgdd_values(std::span<const double> real, std::span<const double> gen, std::size_t n_bins = 10);
TgddResult tgdd(const std::vector<TemperatureSample>& real, const std::vector<TemperatureSample>& gen,
                std::size_t n_bins = 10);
/// Pooled hourly gradients of every pixel of every sample.
std::vector<double> pooled_temporal_gradients(const std::vector<TemperatureSample>& samples);

struct QQEnvelope {
  std::vector<double> levels;
  std::vector<double> ground_truth;
  std::vector<double> low;
  std::vector<double> high;
  std::vector<double> median;  // across realizations
  std::size_t realizations = 0;

  /// median - ground truth at level i.
  double offset(std::size_t i) const { return median[i] - ground_truth[i]; }
  bool contains_identity(std::size_t i) const { return low[i] <= ground_truth[i] && ground_truth[i] <= high[i]; }
  double identity_coverage() const;
  /// Median over levels of offset(i).
  double median_offset() const;
};

using RealizationSampler = std::function<std::vector<double>(std::uint64_t seed)>;

/// 0.01 .. 0.99 in steps of 0.01.
std::vector<double> default_qq_levels();
/// Realization seeds come from one mt19937_64(root_seed) stream.
QQEnvelope qq_envelope(std::span<const double> real_values, const RealizationSampler& sampler,
                       std::size_t n_realizations = 100, std::vector<double> levels = default_qq_levels(),
                       std::uint64_t root_seed = 0);
/// All pixel values of all samples.
std::vector<double> pooled_values(const std::vector<TemperatureSample>& samples);

/// Sorted (value, count(<= value) / n) pairs.
std::vector<std::pair<double, double>> ecdf(std::span<const double> values);

/// (max, min) of each sample's 24-hour spatial-mean series.
std::vector<std::pair<double, double>> daily_extrema(const std::vector<TemperatureSample>& samples);

}  // namespace tempgen
