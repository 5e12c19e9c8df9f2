#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tempgen/grid_store.hpp"
#include "tempgen/nets.hpp"
#include "tempgen/objectives.hpp"
#include "tempgen/optim.hpp"

namespace tempgen {

struct TrainConfig {
  long epochs = 300;
  std::size_t batch_size = 32;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.99;
  double lr_decay_gamma = 0.98;  // applied every 100 epochs
  int n_critic = 1;
  std::uint64_t seed = 0;
  LossConfig loss;
  NetConfig nets = NetConfig::toy();
  int base_year = 1979;
  /// Write a checkpoint to `checkpoint_dir`/epoch_<n> every K epochs; 0 = off.
  long checkpoint_every = 0;
  std::string checkpoint_dir;
  double divergence_limit = 1e6;

  void validate() const;
  std::string to_json() const;
  /// Overlays the keys present in `text` on `base`. Unknown keys are errors.
  static TrainConfig from_json(const std::string& text, const TrainConfig& base);
  static TrainConfig from_json(const std::string& text);
};

enum class StepKind { critic, generator };

struct TrainLogRow {
  long step = 0;
  long epoch = 0;
  StepKind kind = StepKind::critic;
  std::optional<double> loss_dt, loss_ds, loss_g;
  std::optional<double> gp_t, gp_s;
  std::optional<double> grad_norm_t, grad_norm_s;  // mean ||grad D(x_hat)||
  double lr = 0.0;
  bool skipped = false;  // non-finite gradient, update not applied

  bool operator==(const TrainLogRow&) const = default;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  std::vector<double> epoch_seconds;  // wall time, excluded from the CSV
  std::vector<std::string> events;

  /// step,epoch,loss_dt,loss_ds,loss_g,gp_t,gp_s,lr; absent values are blank.
  std::string to_csv() const;
  std::size_t count(StepKind kind) const;
};

/// Everything a checkpoint needs besides the generator weights.
struct CheckpointMeta {
  NetConfig nets;
  std::optional<StandardizationStats> stats;
  int base_year = 1979;
  LossConfig loss;
  long epoch = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static CheckpointMeta from_json(const std::string& text);
};

/// Directory with generator.tpar and model.json.
void save_checkpoint(const Generator& g, const CheckpointMeta& meta, const std::string& dir);

struct LoadedCheckpoint {
  Generator generator;
  CheckpointMeta meta;
};
LoadedCheckpoint load_checkpoint(const std::string& dir);

struct TrainResult {
  Generator generator;
  CheckpointMeta meta;
  TrainLog log;
  /// Set when the divergence guard fired; `generator` then holds the last
  /// good (end of epoch) weights.
  bool diverged = false;
  std::string abort_reason;
};

/// The generator train() starts from for this config (same seed stream).
Generator initial_generator(const TrainConfig& cfg);

/// `buckets` must already be standardised with `stats`. On divergence the
/// last good weights are returned and, when `checkpoint_dir` is set, written
/// to `checkpoint_dir`/last_good.
TrainResult train(const std::vector<SampleBucket>& buckets, const StandardizationStats& stats,
                  const TrainConfig& cfg);

/// Eval-mode draws destandardised to Kelvin. z ~ N(0, 1) from mt19937_64(seed).
std::vector<TemperatureSample> generate_samples(Generator& g, const StandardizationStats& stats,
                                                const ConditionLabel& label, std::size_t n, std::uint64_t seed);
std::vector<TemperatureSample> sample_conditioned(const std::string& checkpoint_dir, const ConditionLabel& label,
                                                  std::size_t n, std::uint64_t seed);

}  // namespace tempgen
