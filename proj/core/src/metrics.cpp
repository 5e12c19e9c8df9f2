#include "tempgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tempgen/error.hpp"
#include "tempgen/objectives.hpp"
#include "tempgen/stats.hpp"

namespace tempgen {

std::size_t CorrelationMatrix::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

CorrelationMatrix pearson_matrix(std::span<const double> observations, std::size_t n_vars) {
  if (n_vars == 0 || observations.size() % n_vars != 0) {
    throw ShapeError("pearson_matrix: observation block is not a multiple of the variable count");
  }
  const std::size_t n_obs = observations.size() / n_vars;
  if (n_obs < 2) throw DataError("pearson_matrix: need at least 2 observations per variable");

  std::vector<double> mean(n_vars, 0.0);
  for (std::size_t o = 0; o < n_obs; ++o) {
    for (std::size_t i = 0; i < n_vars; ++i) mean[i] += observations[o * n_vars + i];
  }
  for (auto& m : mean) m /= static_cast<double>(n_obs);

  std::vector<double> cov(n_vars * n_vars, 0.0);
  std::vector<double> centred(n_vars);
  for (std::size_t o = 0; o < n_obs; ++o) {
    for (std::size_t i = 0; i < n_vars; ++i) centred[i] = observations[o * n_vars + i] - mean[i];
    for (std::size_t i = 0; i < n_vars; ++i) {
      for (std::size_t j = i; j < n_vars; ++j) cov[i * n_vars + j] += centred[i] * centred[j];
    }
  }

  CorrelationMatrix out;
  out.n = n_vars;
  out.rho.assign(n_vars * n_vars, 0.0);
  out.valid.assign(n_vars, false);
  for (std::size_t i = 0; i < n_vars; ++i) out.valid[i] = cov[i * n_vars + i] > 0.0;
  for (std::size_t i = 0; i < n_vars; ++i) {
    if (!out.valid[i]) continue;
    for (std::size_t j = i; j < n_vars; ++j) {
      if (!out.valid[j]) continue;
      double r = i == j ? 1.0 : cov[i * n_vars + j] / std::sqrt(cov[i * n_vars + i] * cov[j * n_vars + j]);
      r = std::clamp(r, -1.0, 1.0);
      out.rho[i * n_vars + j] = r;
      out.rho[j * n_vars + i] = r;
    }
  }
  return out;
}

CorrelationMatrix ppcc_matrix(const std::vector<TemperatureSample>& samples) {
  std::vector<double> obs;
  obs.reserve(samples.size() * kSampleValues);
  for (const auto& s : samples) {
    if (s.values.size() != kSampleValues) throw ShapeError("ppcc_matrix: sample is not 24x8x8");
    obs.insert(obs.end(), s.values.begin(), s.values.end());
  }
  return pearson_matrix(obs, kPixelsPerFrame);
}

double spacd(const CorrelationMatrix& real, const CorrelationMatrix& gen) {
  if (real.n != gen.n) throw DataError("spacd: correlation matrices have different sizes");
  if (real.valid != gen.valid) {
    std::string pixels;
    for (std::size_t i = 0; i < real.n; ++i) {
      if (real.valid[i] != gen.valid[i]) pixels += (pixels.empty() ? "" : ", ") + std::to_string(i);
    }
    throw DataError("spacd: incompatible zero-variance masks at pixels " + pixels);
  }
  const std::size_t n_valid = real.valid_count();
  if (n_valid == 0) throw DataError("spacd: every pixel is masked (constant input)");
  double worst = 0.0;
  for (std::size_t j = 0; j < real.n; ++j) {
    if (!real.valid[j]) continue;
    double col = 0.0;
    for (std::size_t i = 0; i < real.n; ++i) {
      if (real.valid[i]) col += std::abs(gen.at(i, j) - real.at(i, j));
    }
    worst = std::max(worst, col);
  }
  return worst / static_cast<double>(n_valid);
}

double spacd(const std::vector<TemperatureSample>& real, const std::vector<TemperatureSample>& gen) {
  return spacd(ppcc_matrix(real), ppcc_matrix(gen));
}

double frechet_gaussian_1d(double mu_r, double sigma_r, double mu_g, double sigma_g) {
  return std::hypot(mu_r - mu_g, sigma_r - sigma_g);
}

namespace {

std::vector<double> percentile_bulk(std::span<const double> values, double lo, double hi) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double q_lo = stats::quantile_sorted(sorted, lo / 100.0);
  const double q_hi = stats::quantile_sorted(sorted, hi / 100.0);
  std::vector<double> bulk;
  for (double v : sorted) {
    if (v >= q_lo && v <= q_hi) bulk.push_back(v);
  }
  return bulk;
}

}  // namespace

FdtdResult fdtd(std::span<const double> real_daily_means, std::span<const double> gen_daily_means, double lo_percentile,
                double hi_percentile) {
  if (!(lo_percentile >= 0.0 && lo_percentile < hi_percentile && hi_percentile <= 100.0)) {
    throw UsageError("fdtd: percentile bulk must satisfy 0 <= lo < hi <= 100");
  }
  if (real_daily_means.size() < 10 || gen_daily_means.size() < 10) {
    throw DataError("fdtd: too few samples (need at least 10 daily means per corpus)");
  }
  const auto real = percentile_bulk(real_daily_means, lo_percentile, hi_percentile);
  const auto gen = percentile_bulk(gen_daily_means, lo_percentile, hi_percentile);
  FdtdResult r;
  r.mu_r = stats::mean(real);
  r.sigma_r = stats::population_std(real);
  r.mu_g = stats::mean(gen);
  r.sigma_g = stats::population_std(gen);
  r.bulk_r = real.size();
  r.bulk_g = gen.size();
  r.value = frechet_gaussian_1d(r.mu_r, r.sigma_r, r.mu_g, r.sigma_g);
  return r;
}

std::vector<double> daily_means(const std::vector<TemperatureSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(stats::mean(s.values));
  return out;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw DataError("js_divergence: distributions need the same support size");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) throw DataError("js_divergence: negative probability mass");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
    throw DataError("js_divergence: distributions must sum to 1");
  }
  const auto kl_to_mid = [](double a, double b) { return a > 0.0 ? a * std::log(a / (0.5 * (a + b))) : 0.0; };
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) js += 0.5 * kl_to_mid(p[i], q[i]) + 0.5 * kl_to_mid(q[i], p[i]);
  return std::max(js, 0.0);
}

namespace {

std::vector<double> bin_masses(std::span<const double> values, const std::vector<double>& edges) {
  const std::size_t bins = edges.size() - 1;
  std::vector<double> mass(bins, 0.0);
  for (double v : values) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t b = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
    mass[std::min(b, bins - 1)] += 1.0;
  }
  for (auto& m : mass) m /= static_cast<double>(values.size());
  return mass;
}

}  // namespace

TgddResult tgdd_values(std::span<const double> real, std::span<const double> gen, std::size_t n_bins) {
  if (n_bins < 1) throw UsageError("tgdd: need at least one bin");
  if (real.size() < n_bins * 10 || gen.size() < n_bins * 10) {
    throw DataError("tgdd: need at least " + std::to_string(n_bins * 10) + " gradient values per corpus");
  }
  std::vector<double> pooled(real.begin(), real.end());
  pooled.insert(pooled.end(), gen.begin(), gen.end());
  std::sort(pooled.begin(), pooled.end());

  TgddResult r;
  r.requested_bins = n_bins;
  for (std::size_t i = 0; i <= n_bins; ++i) {
    const double e = stats::quantile_sorted(pooled, static_cast<double>(i) / static_cast<double>(n_bins));
    if (r.edges.empty() || e > r.edges.back()) r.edges.push_back(e);
  }
  if (r.edges.size() == 1) r.edges.push_back(r.edges.front());  // every value tied: one bin
  r.effective_bins = r.edges.size() - 1;
  r.p = bin_masses(real, r.edges);
  r.q = bin_masses(gen, r.edges);
  double total = 0.0;
  for (std::size_t i = 0; i < r.effective_bins; ++i) {
    const double p2[2] = {r.p[i], 1.0 - r.p[i]};
    const double q2[2] = {r.q[i], 1.0 - r.q[i]};
    total += js_divergence(p2, q2);
  }
  r.value = total / static_cast<double>(r.effective_bins);
  return r;
}

std::vector<double> pooled_temporal_gradients(const std::vector<TemperatureSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size() * (kHoursPerDay - 1) * kPixelsPerFrame);
  for (const auto& s : samples) {
    const auto g = temporal_gradients(s);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

TgddResult tgdd(const std::vector<TemperatureSample>& real, const std::vector<TemperatureSample>& gen,
                std::size_t n_bins) {
  return tgdd_values(pooled_temporal_gradients(real), pooled_temporal_gradients(gen), n_bins);
}

double QQEnvelope::identity_coverage() const {
  if (levels.empty()) return 0.0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) inside += contains_identity(i);
  return static_cast<double>(inside) / static_cast<double>(levels.size());
}

double QQEnvelope::median_offset() const {
  std::vector<double> offsets(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) offsets[i] = offset(i);
  return stats::quantile(std::move(offsets), 0.5);
}

std::vector<double> default_qq_levels() {
  std::vector<double> levels;
  for (int i = 1; i <= 99; ++i) levels.push_back(i / 100.0);
  return levels;
}

QQEnvelope qq_envelope(std::span<const double> real_values, const RealizationSampler& sampler,
                       std::size_t n_realizations, std::vector<double> levels, std::uint64_t root_seed) {
  if (real_values.empty()) throw DataError("qq_envelope: empty ground truth");
  if (n_realizations == 0) throw UsageError("qq_envelope: need at least one realization");
  if (levels.empty()) throw UsageError("qq_envelope: no quantile levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0) || (i > 0 && !(levels[i] > levels[i - 1]))) {
      throw UsageError("qq_envelope: levels must be strictly increasing inside (0, 1)");
    }
  }
  QQEnvelope env;
  env.levels = std::move(levels);
  env.realizations = n_realizations;
  std::vector<double> truth(real_values.begin(), real_values.end());
  std::sort(truth.begin(), truth.end());
  for (double l : env.levels) env.ground_truth.push_back(stats::quantile_sorted(truth, l));

  const std::size_t n_levels = env.levels.size();
  std::vector<std::vector<double>> per_level(n_levels, std::vector<double>(n_realizations));
  std::mt19937_64 root(root_seed);
  for (std::size_t r = 0; r < n_realizations; ++r) {
    auto values = sampler(root());
    if (values.size() != real_values.size()) {
      throw DataError("qq_envelope: realization holds " + std::to_string(values.size()) + " values, ground truth " +
                      std::to_string(real_values.size()));
    }
    std::sort(values.begin(), values.end());
    for (std::size_t i = 0; i < n_levels; ++i) per_level[i][r] = stats::quantile_sorted(values, env.levels[i]);
  }
  for (auto& q : per_level) {
    std::sort(q.begin(), q.end());
    env.low.push_back(q.front());
    env.high.push_back(q.back());
    env.median.push_back(stats::quantile_sorted(q, 0.5));
  }
  return env;
}

std::vector<double> pooled_values(const std::vector<TemperatureSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size() * kSampleValues);
  for (const auto& s : samples) out.insert(out.end(), s.values.begin(), s.values.end());
  return out;
}

std::vector<std::pair<double, double>> ecdf(std::span<const double> values) {
  if (values.empty()) throw DataError("ecdf: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(sorted.size());
  for (double v : sorted) {
    const auto rank = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
    out.emplace_back(v, static_cast<double>(rank) / n);
  }
  return out;
}

std::vector<std::pair<double, double>> daily_extrema(const std::vector<TemperatureSample>& samples) {
  std::vector<std::pair<double, double>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    double hi = -INFINITY, lo = INFINITY;
    for (std::size_t t = 0; t < kHoursPerDay; ++t) {
      const double m =
          stats::mean(std::span<const double>(s.values).subspan(t * kPixelsPerFrame, kPixelsPerFrame));
      hi = std::max(hi, m);
      lo = std::min(lo, m);
    }
    out.emplace_back(hi, lo);
  }
  return out;
}

}  // namespace tempgen
