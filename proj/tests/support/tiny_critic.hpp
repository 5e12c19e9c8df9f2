#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "tempgen/objectives.hpp"

namespace tempgen::check {

// Hand-rolled D(x) = sum_j v_j tanh(<W_j, phi(x)>) where phi is the identity
// or the hourly difference stage. Returns per-sample score and input gradient.
struct TinyCritic {
  std::vector<double> W;  // (hidden, in)
  std::vector<double> v;
  std::size_t hidden = 3;
  bool differences = false;

  std::size_t in_dim() const { return differences ? 23 * 64 : kSampleValues; }

  std::vector<double> features(const double* x) const {
    if (!differences) return {x, x + kSampleValues};
    std::vector<double> d(23 * 64);
    for (std::size_t t = 0; t < 23; ++t)
      for (std::size_t p = 0; p < 64; ++p) d[t * 64 + p] = x[(t + 1) * 64 + p] - x[t * 64 + p];
    return d;
  }

  std::pair<double, std::vector<double>> eval(const double* x) const {
    const auto f = features(x);
    double score = 0.0;
    std::vector<double> gf(in_dim(), 0.0);
    for (std::size_t j = 0; j < hidden; ++j) {
      double a = 0.0;
      for (std::size_t i = 0; i < in_dim(); ++i) a += W[j * in_dim() + i] * f[i];
      const double t = std::tanh(a);
      score += v[j] * t;
      for (std::size_t i = 0; i < in_dim(); ++i) gf[i] += v[j] * (1.0 - t * t) * W[j * in_dim() + i];
    }
    if (!differences) return {score, gf};
    std::vector<double> gx(kSampleValues, 0.0);
    for (std::size_t t = 0; t < 23; ++t)
      for (std::size_t p = 0; p < 64; ++p) {
        gx[(t + 1) * 64 + p] += gf[t * 64 + p];
        gx[t * 64 + p] -= gf[t * 64 + p];
      }
    return {score, gx};
  }

  CriticFn as_fn() const {
    const Tensor Wt = Tensor::from({hidden, in_dim()}, W);
    const Tensor vt = Tensor::from({hidden, 1}, v);
    const bool diff = differences;
    return [Wt, vt, diff](const Tensor& x, const Tensor&) {
      const Tensor f = diff ? hourly_differences(x) : x;
      return matmul(tanh(matmul(flatten(f), Wt, false, true)), vt);
    };
  }

  double loss(const Tensor& real, const Tensor& fake, const std::vector<double>& u, double lambda) const {
    const std::size_t n = u.size();
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double* r = real.data().data() + s * kSampleValues;
      const double* f = fake.data().data() + s * kSampleValues;
      std::vector<double> xh(kSampleValues);
      for (std::size_t i = 0; i < kSampleValues; ++i) xh[i] = u[s] * r[i] + (1.0 - u[s]) * f[i];
      const auto [g_score, g] = eval(xh.data());
      double norm = 0.0;
      for (double gi : g) norm += gi * gi;
      norm = std::sqrt(norm);
      total += eval(f).first - eval(r).first + lambda * (norm - 1.0) * (norm - 1.0);
    }
    return total / double(n);
  }
};

inline TinyCritic make_tiny(std::mt19937_64& rng, bool differences) {
  TinyCritic c;
  c.differences = differences;
  std::normal_distribution<double> nd(0.0, 0.05);
  c.W.resize(c.hidden * c.in_dim());
  for (auto& w : c.W) w = nd(rng);
  c.v = {0.7, -1.3, 0.4};
  return c;
}

}  // namespace tempgen::check
