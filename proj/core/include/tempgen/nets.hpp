#pragma once

// Conditional generator and the two Wasserstein critics.
//
// Layer stacks follow the published architecture tables; widths are
// configurable so tests and desk-scale training can run reduced ("toy")
// networks with the same topology. Fixed by topology regardless of width:
// noise and label embedding are 100-d, the generator's last dense layer has
// 100 units (the 1-D signal length), and its Conv1D emits 28 channels so the
// result unsqueezes to a 28x28 image.

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tempgen/grid_store.hpp"
#include "tempgen/parameters.hpp"
#include "tempgen/tensor.hpp"

namespace tempgen {

inline constexpr std::size_t kNoiseDim = 100;
inline constexpr std::size_t kEmbeddingDim = 100;
inline constexpr double kCriticSlope = 0.2;

/// Month, region and period blocks of the label embedding. Sum is 100.
inline constexpr std::size_t kMonthEmbedding = 56;
inline constexpr std::size_t kRegionEmbedding = 28;
inline constexpr std::size_t kPeriodEmbedding = 16;
inline constexpr double kRegionInputScale = 1.0 / 32.0;
inline constexpr double kPeriodInputScale = 1.0 / 16.0;

struct GeneratorWidths {
  std::size_t fc1 = 400;
  std::size_t fc2 = 800;
  std::array<std::size_t, 4> convt{10, 10, 64, 112};
  std::array<std::size_t, 4> conv{2, 4, 16, 24};
};

struct SpatialCriticWidths {
  std::size_t conv = 24;
  std::size_t fc_in = 100;
  std::size_t fc1 = 150;
  std::size_t fc2 = 50;
};

struct TemporalCriticWidths {
  std::size_t conv1 = 16;
  std::size_t conv2 = 4;
  std::size_t fc1 = 164;
  std::size_t fc2 = 200;
  std::size_t fc3 = 100;
};

struct NetConfig {
  GeneratorWidths generator;
  SpatialCriticWidths spatial;
  TemporalCriticWidths temporal;

  /// Published widths.
  static NetConfig paper();
  /// Reduced widths for desk-scale runs (every network under 60k parameters).
  static NetConfig toy();

  std::string to_json() const;
  static NetConfig from_json(const std::string& text);
};

/// Shapes after each row of an architecture table, input first.
using ShapeTrace = std::vector<Shape>;

/// (N, 15) raw label tensor; validates each month one-hot block.
Tensor label_tensor(const std::vector<ConditionLabel>& labels);

/// Per-variable dense blocks mapping the 15-d raw label to 100-d.
class LabelEmbedding {
 public:
  LabelEmbedding() = default;
  LabelEmbedding(ParameterSet& params, const std::string& prefix, std::mt19937_64& rng);
  Tensor forward(const ParameterSet& params, const Tensor& labels) const;

 private:
  std::string prefix_;
};

/// Forward hourly differences along axis 1: (N, 24, ...) -> (N, 23, ...).
Tensor hourly_differences(const Tensor& x);

class Generator {
 public:
  explicit Generator(const GeneratorWidths& widths = {}, std::uint64_t seed = 0);

  /// z (N, 100), labels (N, 15) -> (N, 24, 8, 8) in standard units.
  Tensor forward(const Tensor& z, const Tensor& labels, bool training, ShapeTrace* trace = nullptr);
  /// Single-sample eval-mode convenience.
  TemperatureSample generate(const std::vector<double>& z, const ConditionLabel& label);

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const GeneratorWidths& widths() const { return widths_; }
  /// Count of the architecture-table layers (embedding excluded; BatchNorm
  /// affine parameters and conv biases included).
  std::size_t table_parameter_count() const;

 private:
  GeneratorWidths widths_;
  ParameterSet params_;
  LabelEmbedding embedding_;
  std::map<std::string, BatchNormState> norms_;
};

class SpatialCritic {
 public:
  explicit SpatialCritic(const SpatialCriticWidths& widths = {}, std::uint64_t seed = 0);
  /// x (N, 24, 8, 8), labels (N, 15) -> (N, 1) unbounded scores.
  Tensor forward(const Tensor& x, const Tensor& labels, ShapeTrace* trace = nullptr) const;
  double score(const TemperatureSample& sample, const ConditionLabel& label) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  SpatialCriticWidths widths_;
  ParameterSet params_;
  LabelEmbedding embedding_;
};

class TemporalCritic {
 public:
  explicit TemporalCritic(const TemporalCriticWidths& widths = {}, std::uint64_t seed = 0);
  /// x (N, 24, 8, 8), labels (N, 15) -> (N, 1). Sees only hourly differences.
  Tensor forward(const Tensor& x, const Tensor& labels, ShapeTrace* trace = nullptr) const;
  double score(const TemperatureSample& sample, const ConditionLabel& label) const;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  TemporalCriticWidths widths_;
  ParameterSet params_;
  LabelEmbedding embedding_;
};

/// (N, 24, 8, 8) tensor from samples.
Tensor sample_tensor(const std::vector<TemperatureSample>& samples);
std::vector<TemperatureSample> tensor_samples(const Tensor& x, const std::vector<ConditionLabel>& labels);

}  // namespace tempgen
