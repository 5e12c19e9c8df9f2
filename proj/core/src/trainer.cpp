#include "tempgen/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "tempgen/error.hpp"
#include "tempgen/report.hpp"

namespace tempgen {

namespace fs = std::filesystem;

// --- configuration ----------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 2) throw UsageError("batch_size must be >= 2 (batch normalisation needs two samples)");
  if (!(lr_g > 0.0) || !(lr_d > 0.0)) throw UsageError("learning rates must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (!(lr_decay_gamma > 0.0)) throw UsageError("lr_decay_gamma must be positive");
  if (n_critic < 1) throw UsageError("n_critic must be >= 1");
  if (checkpoint_every < 0) throw UsageError("checkpoint_every must be >= 0");
  loss.validate();
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr_g"] = lr_g;
  j["lr_d"] = lr_d;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["lr_decay_gamma"] = lr_decay_gamma;
  j["n_critic"] = n_critic;
  j["seed"] = seed;
  j["lambda_gp"] = loss.lambda_gp;
  j["lambda_tp"] = loss.lambda_tp;
  j["variant"] = to_string(loss.variant);
  j["nets"] = nlohmann::ordered_json::parse(nets.to_json());
  j["base_year"] = base_year;
  j["checkpoint_every"] = checkpoint_every;
  j["divergence_limit"] = divergence_limit;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text, const TrainConfig& base) {
  TrainConfig c = base;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "epochs") c.epochs = v.get<long>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "lr_g") c.lr_g = v.get<double>();
      else if (key == "lr_d") c.lr_d = v.get<double>();
      else if (key == "lr") c.lr_g = c.lr_d = v.get<double>();
      else if (key == "adam_beta1") c.adam_beta1 = v.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = v.get<double>();
      else if (key == "lr_decay_gamma") c.lr_decay_gamma = v.get<double>();
      else if (key == "n_critic") c.n_critic = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "lambda_gp") c.loss.lambda_gp = v.get<double>();
      else if (key == "lambda_tp") c.loss.lambda_tp = v.get<double>();
      else if (key == "variant") c.loss.variant = parse_loss_variant(v.get<std::string>());
      else if (key == "base_year") c.base_year = v.get<int>();
      else if (key == "checkpoint_every") c.checkpoint_every = v.get<long>();
      else if (key == "divergence_limit") c.divergence_limit = v.get<double>();
      else if (key == "nets") {
        if (v.is_string()) {
          const auto name = v.get<std::string>();
          if (name == "toy") c.nets = NetConfig::toy();
          else if (name == "paper") c.nets = NetConfig::paper();
          else throw UsageError("nets must be \"toy\", \"paper\" or an object");
        } else {
          c.nets = NetConfig::from_json(v.dump());
        }
      } else {
        throw UsageError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config has a value of the wrong type: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::from_json(const std::string& text) { return from_json(text, TrainConfig{}); }

// --- log ------------------------------------------------------------------------------

std::string TrainLog::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "step,epoch,loss_dt,loss_ds,loss_g,gp_t,gp_s,lr\n";
  const auto cell = [&os](const std::optional<double>& v) {
    if (v) os << *v;
    os << ',';
  };
  for (const auto& r : rows) {
    os << r.step << ',' << r.epoch << ',';
    cell(r.loss_dt);
    cell(r.loss_ds);
    cell(r.loss_g);
    cell(r.gp_t);
    cell(r.gp_s);
    os << r.lr << '\n';
  }
  return os.str();
}

std::size_t TrainLog::count(StepKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [kind](const TrainLogRow& r) { return r.kind == kind; }));
}

// --- checkpoints -----------------------------------------------------------------------

std::string CheckpointMeta::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "tempgen-checkpoint";
  j["artifact_version"] = artifact_version();
  j["nets"] = nlohmann::ordered_json::parse(nets.to_json());
  if (stats) {
    j["standardization"] = {{"mean", stats->mean}, {"std", stats->std}, {"std_convention", "population"}};
  }
  j["base_year"] = base_year;
  j["loss"] = {{"lambda_gp", loss.lambda_gp}, {"lambda_tp", loss.lambda_tp}, {"variant", to_string(loss.variant)}};
  j["epoch"] = epoch;
  j["seed"] = seed;
  j["weights"] = "generator.tpar";
  return j.dump(2) + "\n";
}

CheckpointMeta CheckpointMeta::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CheckpointMeta m;
    m.nets = NetConfig::from_json(j.at("nets").dump());
    if (j.contains("standardization")) {
      const auto& s = j.at("standardization");
      m.stats = StandardizationStats{s.at("mean").get<double>(), s.at("std").get<double>()};
    }
    m.base_year = j.at("base_year").get<int>();
    const auto& l = j.at("loss");
    m.loss.lambda_gp = l.at("lambda_gp").get<double>();
    m.loss.lambda_tp = l.at("lambda_tp").get<double>();
    m.loss.variant = parse_loss_variant(l.at("variant").get<std::string>());
    m.epoch = j.at("epoch").get<long>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid checkpoint metadata: ") + e.what());
  }
}

void save_checkpoint(const Generator& g, const CheckpointMeta& meta, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir + ": " + ec.message());
  save_tpar(g.params(), (fs::path(dir) / "generator.tpar").string());
  write_text((fs::path(dir) / "model.json").string(), meta.to_json());
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  CheckpointMeta meta = CheckpointMeta::from_json(read_text((fs::path(dir) / "model.json").string()));
  Generator g(meta.nets.generator, 0);
  load_tpar(g.params(), (fs::path(dir) / "generator.tpar").string());
  return {std::move(g), std::move(meta)};
}

// --- training ----------------------------------------------------------------------------

namespace {

struct Batch {
  Tensor real;
  Tensor labels;
  std::size_t size = 0;
};

Tensor normal_tensor(const Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = unit(rng);
  return Tensor::from(shape, std::move(v));
}

std::vector<double> uniform_draws(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void check_finite_loss(double value, const char* name, double limit) {
  if (!std::isfinite(value)) throw NumericalError(std::string(name) + " became non-finite");
  if (std::abs(value) > limit) {
    std::ostringstream os;
    os << name << " = " << value << " exceeds the divergence limit " << limit;
    throw NumericalError(os.str());
  }
}

using Snapshot = std::vector<std::vector<double>>;

Snapshot snapshot(const ParameterSet& p) {
  Snapshot s;
  for (const auto& [name, t] : p.parameters()) s.emplace_back(t.data().begin(), t.data().end());
  for (const auto& [name, t] : p.buffers()) s.emplace_back(t.data().begin(), t.data().end());
  return s;
}

void restore(ParameterSet& p, const Snapshot& s) {
  std::size_t i = 0;
  for (auto& [name, t] : p.parameters()) std::copy(s[i].begin(), s[i].end(), t.mutable_data().begin()), ++i;
  for (const auto& [name, t] : p.buffers()) {
    Tensor view = t;
    std::copy(s[i].begin(), s[i].end(), view.mutable_data().begin());
    ++i;
  }
}

struct NetworkSeeds {
  std::uint64_t g, ds, dt;
};

NetworkSeeds network_seeds(std::mt19937_64& rng) {
  const std::uint64_t g = rng(), ds = rng(), dt = rng();
  return {g, ds, dt};
}

}  // namespace

Generator initial_generator(const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return Generator(cfg.nets.generator, network_seeds(rng).g);
}

TrainResult train(const std::vector<SampleBucket>& buckets, const StandardizationStats& stats,
                  const TrainConfig& cfg) {
  cfg.validate();
  std::vector<const TemperatureSample*> pool;
  for (const auto& b : buckets) {
    for (const auto& s : b.samples) pool.push_back(&s);
  }
  if (pool.size() < 2) throw DataError("training needs at least two samples");

  std::mt19937_64 rng(cfg.seed);
  const auto [g_seed, ds_seed, dt_seed] = network_seeds(rng);
  const bool dual = cfg.loss.variant == LossVariant::dual_critic;
  TrainResult result{Generator(cfg.nets.generator, g_seed), {}, {}, false, {}};
  Generator& g = result.generator;
  SpatialCritic ds(cfg.nets.spatial, ds_seed);
  TemporalCritic dt(cfg.nets.temporal, dt_seed);
  AdamState g_state, ds_state, dt_state;
  const AdamConfig adam{cfg.adam_beta1, cfg.adam_beta2, 1e-8};

  result.meta.nets = cfg.nets;
  result.meta.stats = stats;
  result.meta.base_year = cfg.base_year;
  result.meta.loss = cfg.loss;
  result.meta.seed = cfg.seed;

  Snapshot last_good = snapshot(g.params());
  long last_good_epoch = 0;
  long step = 0;
  auto& log = result.log;

  std::vector<std::size_t> order(pool.size());
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr_g = lr_schedule(epoch, cfg.lr_g, cfg.lr_decay_gamma);
    const double lr_d = lr_schedule(epoch, cfg.lr_d, cfg.lr_decay_gamma);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    try {
      for (std::size_t start = 0; start + 2 <= order.size(); start += cfg.batch_size) {
        const std::size_t n = std::min(cfg.batch_size, order.size() - start);
        if (n < 2) break;
        std::vector<TemperatureSample> batch_samples;
        std::vector<ConditionLabel> batch_labels;
        for (std::size_t i = 0; i < n; ++i) {
          batch_samples.push_back(*pool[order[start + i]]);
          batch_labels.push_back(pool[order[start + i]]->label);
        }
        const Tensor real = sample_tensor(batch_samples);
        const Tensor labels = label_tensor(batch_labels);

        for (int c = 0; c < cfg.n_critic; ++c) {
          Tensor fake;
          {
            NoGradGuard no_grad;
            fake = g.forward(normal_tensor({n, kNoiseDim}, rng), labels, true).detach();
          }
          const auto u = uniform_draws(n, rng);
          TrainLogRow row;
          row.step = step++;
          row.epoch = epoch;
          row.kind = StepKind::critic;
          row.lr = lr_d;

          ds.params().zero_grad();
          const CriticLoss ls = loss_d_spatial(ds, real, fake, labels, u, cfg.loss);
          ls.loss.backward();
          row.loss_ds = ls.loss.item();
          row.gp_s = ls.penalty;
          row.grad_norm_s = ls.mean_grad_norm;
          check_finite_loss(*row.loss_ds, "loss_ds", cfg.divergence_limit);
          if (adam_step(ds.params(), ds_state, lr_d, adam) != StepOutcome::applied) row.skipped = true;

          if (dual) {
            dt.params().zero_grad();
            const CriticLoss lt = loss_d_temporal(dt, real, fake, labels, u, cfg.loss);
            lt.loss.backward();
            row.loss_dt = lt.loss.item();
            row.gp_t = lt.penalty;
            row.grad_norm_t = lt.mean_grad_norm;
            check_finite_loss(*row.loss_dt, "loss_dt", cfg.divergence_limit);
            if (adam_step(dt.params(), dt_state, lr_d, adam) != StepOutcome::applied) row.skipped = true;
          }
          if (row.skipped) log.events.push_back("step " + std::to_string(row.step) + ": non-finite critic gradient, update skipped");
          log.rows.push_back(row);
        }

        TrainLogRow row;
        row.step = step++;
        row.epoch = epoch;
        row.kind = StepKind::generator;
        row.lr = lr_g;
        g.params().zero_grad();
        const Tensor fake = g.forward(normal_tensor({n, kNoiseDim}, rng), labels, true);
        const Tensor loss = dual ? loss_g(ds, dt, fake, labels) : loss_g_tgp(ds, fake, labels, cfg.loss);
        loss.backward();
        row.loss_g = loss.item();
        check_finite_loss(*row.loss_g, "loss_g", cfg.divergence_limit);
        if (adam_step(g.params(), g_state, lr_g, adam) != StepOutcome::applied) {
          row.skipped = true;
          log.events.push_back("step " + std::to_string(row.step) + ": non-finite generator gradient, update skipped");
        }
        log.rows.push_back(row);
      }
    } catch (const NumericalError& e) {
      restore(g.params(), last_good);
      result.diverged = true;
      result.abort_reason = std::string("epoch ") + std::to_string(epoch) + ": " + e.what();
      result.meta.epoch = last_good_epoch;
      log.events.push_back("divergence guard: " + result.abort_reason);
      if (!cfg.checkpoint_dir.empty()) {
        save_checkpoint(g, result.meta, (fs::path(cfg.checkpoint_dir) / "last_good").string());
      }
      return result;
    }
    log.epoch_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    last_good = snapshot(g.params());
    last_good_epoch = epoch + 1;
    result.meta.epoch = epoch + 1;
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() && (epoch + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(g, result.meta, (fs::path(cfg.checkpoint_dir) / ("epoch_" + std::to_string(epoch + 1))).string());
    }
  }
  return result;
}

std::vector<TemperatureSample> generate_samples(Generator& g, const StandardizationStats& stats,
                                                const ConditionLabel& label, std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  std::mt19937_64 rng(seed);
  NoGradGuard no_grad;
  const Tensor z = normal_tensor({n, kNoiseDim}, rng);
  const Tensor out = g.forward(z, label_tensor(std::vector<ConditionLabel>(n, label)), false);
  auto samples = tensor_samples(out, std::vector<ConditionLabel>(n, label));
  for (auto& s : samples) {
    for (auto& v : s.values) v = stats.invert(v);
  }
  return samples;
}

std::vector<TemperatureSample> sample_conditioned(const std::string& checkpoint_dir, const ConditionLabel& label,
                                                  std::size_t n, std::uint64_t seed) {
  auto ckpt = load_checkpoint(checkpoint_dir);
  if (!ckpt.meta.stats) throw DataError("checkpoint " + checkpoint_dir + " lacks standardization stats");
  label.raw();  // validates the month
  return generate_samples(ckpt.generator, *ckpt.meta.stats, label, n, seed);
}

}  // namespace tempgen
