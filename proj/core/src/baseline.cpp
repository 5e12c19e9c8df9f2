#include "tempgen/baseline.hpp"

#include <cmath>
#include <random>

#include "json.hpp"
#include "tempgen/error.hpp"

namespace tempgen {

HourlyGaussianModel fit_baseline(const SampleBucket& bucket) {
  if (bucket.samples.empty()) throw DataError("fit_baseline: empty bucket " + to_string(bucket.label));
  HourlyGaussianModel model;
  model.label = bucket.label;
  const double n = static_cast<double>(bucket.samples.size() * kPixelsPerFrame);
  for (std::size_t t = 0; t < kHoursPerDay; ++t) {
    double sum = 0.0;
    for (const auto& s : bucket.samples) {
      for (std::size_t p = 0; p < kPixelsPerFrame; ++p) sum += s.values[t * kPixelsPerFrame + p];
    }
    const double mu = sum / n;
    double ss = 0.0;
    for (const auto& s : bucket.samples) {
      for (std::size_t p = 0; p < kPixelsPerFrame; ++p) {
        const double d = s.values[t * kPixelsPerFrame + p] - mu;
        ss += d * d;
      }
    }
    model.mu[t] = mu;
    model.sigma[t] = std::sqrt(ss / n);
  }
  return model;
}

std::vector<TemperatureSample> sample_baseline(const HourlyGaussianModel& model, std::size_t n, std::uint64_t seed) {
  for (std::size_t t = 0; t < kHoursPerDay; ++t) {
    if (!std::isfinite(model.mu[t]) || !(model.sigma[t] >= 0.0)) {
      throw DataError("baseline model has invalid parameters at hour " + std::to_string(t));
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<TemperatureSample> out(n);
  for (auto& s : out) {
    s.label = model.label;
    for (std::size_t t = 0; t < kHoursPerDay; ++t) {
      for (std::size_t p = 0; p < kPixelsPerFrame; ++p) {
        s.values[t * kPixelsPerFrame + p] = model.mu[t] + model.sigma[t] * unit(rng);
      }
    }
  }
  return out;
}

std::string HourlyGaussianModel::to_json() const {
  nlohmann::ordered_json j;
  j["label"] = {{"month", label.month}, {"x", label.region.x}, {"y", label.region.y}, {"k", label.period.k}};
  j["mu"] = mu;
  j["sigma"] = sigma;
  j["units"] = "kelvin";
  return j.dump(2);
}

HourlyGaussianModel HourlyGaussianModel::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    HourlyGaussianModel m;
    const auto& l = j.at("label");
    m.label.month = l.at("month").get<unsigned>();
    m.label.region = {l.at("x").get<int>(), l.at("y").get<int>()};
    m.label.period = {l.at("k").get<int>()};
    j.at("mu").get_to(m.mu);
    j.at("sigma").get_to(m.sigma);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid baseline model: ") + e.what());
  }
}

}  // namespace tempgen
