#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tempgen/baseline.hpp"
#include "tempgen/error.hpp"
#include "tempgen/metrics.hpp"

using namespace tempgen;

namespace {

const ConditionLabel kLabel{1, {1, 1}, {0}};

SampleBucket bucket_of(std::vector<TemperatureSample> samples) {
  for (auto& s : samples) s.label = kLabel;
  return {kLabel, std::move(samples)};
}

TemperatureSample constant_sample(double v) {
  TemperatureSample s;
  for (auto& x : s.values) x = v;
  return s;
}

TEST(FitBaseline, ConstantSample) {
  const auto m = fit_baseline(bucket_of({constant_sample(280.0)}));
  for (std::size_t t = 0; t < 24; ++t) {
    EXPECT_EQ(m.mu[t], 280.0);
    EXPECT_EQ(m.sigma[t], 0.0);
  }
  EXPECT_EQ(m.label, kLabel);
}

TEST(FitBaseline, TwoSamplesPopulationConvention) {
  const auto m = fit_baseline(bucket_of({constant_sample(279.0), constant_sample(281.0)}));
  EXPECT_DOUBLE_EQ(m.mu[0], 280.0);
  EXPECT_DOUBLE_EQ(m.sigma[0], 1.0);
}

TEST(FitBaseline, LargeGaussianBucketRecoversMoments) {
  // 157 samples x 64 pixels = 10048 values per hour.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd(290.0, 3.0);
  std::vector<TemperatureSample> samples(157);
  for (auto& s : samples)
    for (auto& v : s.values) v = nd(rng);
  const auto m = fit_baseline(bucket_of(samples));
  for (std::size_t t = 0; t < 24; ++t) {
    EXPECT_NEAR(m.mu[t], 290.0, 0.1);
    EXPECT_NEAR(m.sigma[t], 3.0, 0.1);
  }
}

TEST(FitBaseline, PerHourStatisticsAreSeparate) {
  TemperatureSample s;
  for (std::size_t t = 0; t < 24; ++t)
    for (std::size_t p = 0; p < 64; ++p) s.values[t * 64 + p] = 270.0 + double(t) + (p % 2 ? 0.5 : -0.5);
  const auto m = fit_baseline(bucket_of({s}));
  for (std::size_t t = 0; t < 24; ++t) {
    EXPECT_DOUBLE_EQ(m.mu[t], 270.0 + double(t));
    EXPECT_DOUBLE_EQ(m.sigma[t], 0.5);
  }
}

TEST(FitBaseline, EmptyBucketIsRejected) { EXPECT_THROW(fit_baseline(SampleBucket{kLabel, {}}), DataError); }

HourlyGaussianModel diurnal_model() {
  HourlyGaussianModel m;
  m.label = kLabel;
  for (std::size_t t = 0; t < 24; ++t) {
    m.mu[t] = 280.0 + 4.0 * std::sin(2.0 * M_PI * double(t) / 24.0);
    m.sigma[t] = 1.0 + 0.05 * double(t);
  }
  return m;
}

TEST(SampleBaseline, ZeroSigmaGivesConstantFrames) {
  HourlyGaussianModel m = diurnal_model();
  m.sigma.fill(0.0);
  for (const auto& s : sample_baseline(m, 3, 1)) {
    EXPECT_EQ(s.label, kLabel);
    for (std::size_t t = 0; t < 24; ++t)
      for (std::size_t p = 0; p < 64; ++p) EXPECT_EQ(s.values[t * 64 + p], m.mu[t]);
  }
}

TEST(SampleBaseline, RefitRecoversModel) {
  const auto m = diurnal_model();
  const auto back = fit_baseline(bucket_of(sample_baseline(m, 1000, 5)));
  for (std::size_t t = 0; t < 24; ++t) {
    EXPECT_NEAR(back.mu[t], m.mu[t], 0.02 * std::abs(m.mu[t]));
    EXPECT_NEAR(back.sigma[t], m.sigma[t], 0.02 * m.sigma[t]);
  }
}

TEST(SampleBaseline, SameSeedSameOutput) {
  const auto m = diurnal_model();
  EXPECT_EQ(sample_baseline(m, 4, 17), sample_baseline(m, 4, 17));
  EXPECT_NE(sample_baseline(m, 4, 17), sample_baseline(m, 4, 18));
  EXPECT_TRUE(sample_baseline(m, 0, 1).empty());
}

TEST(SampleBaseline, PixelsAreSpatiallyUncorrelated) {
  // Flat mu: with a diurnal mu, pooling hours adds a mean component shared by
  // every pixel, which is correlation in the pooled estimator by design.
  HourlyGaussianModel flat = diurnal_model();
  flat.mu.fill(280.0);
  const auto c = ppcc_matrix(sample_baseline(flat, 1000, 3));
  double off = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j)
      if (i != j) off += c.at(i, j), ++n;
  const double mean_off = off / double(n);
  EXPECT_GT(mean_off, -0.05);
  EXPECT_LT(mean_off, 0.05);
}

TEST(SampleBaseline, FdtdToGaussianSourceShrinksWithSize) {
  const auto truth = diurnal_model();
  double previous = 1e9;
  for (std::size_t n : {20u, 200u, 2000u}) {
    const auto src = sample_baseline(truth, n, 100 + n);
    const auto gen = sample_baseline(fit_baseline(bucket_of(src)), n, 200 + n);
    const double d = fdtd(daily_means(src), daily_means(gen)).value;
    EXPECT_LT(d, previous) << n;
    previous = d;
  }
  EXPECT_LT(previous, 0.01);
}

TEST(HourlyGaussianModel, JsonRoundTrip) {
  const auto m = diurnal_model();
  const auto back = HourlyGaussianModel::from_json(m.to_json());
  EXPECT_EQ(back.label, m.label);
  for (std::size_t t = 0; t < 24; ++t) {
    EXPECT_DOUBLE_EQ(back.mu[t], m.mu[t]);
    EXPECT_DOUBLE_EQ(back.sigma[t], m.sigma[t]);
  }
  EXPECT_THROW(HourlyGaussianModel::from_json("{\"mu\": [1]}"), DataError);
}

}  // namespace
