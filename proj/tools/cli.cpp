#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"
#include "tempgen/baseline.hpp"
#include "tempgen/error.hpp"
#include "tempgen/metrics.hpp"
#include "tempgen/report.hpp"
#include "tempgen/synthetic.hpp"
#include "tempgen/trainer.hpp"

namespace tempgen::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// --- shared helpers ----------------------------------------------------------

struct Threads {
  std::optional<long> requested;
  long used = 1;
};

Threads read_thread_env() {
  Threads t;
  if (const char* v = std::getenv("TEMPGEN_THREADS"); v && *v) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw UsageError(std::string("TEMPGEN_THREADS must be a positive integer, got '") + v + "'");
    t.requested = n;
  }
  return t;
}

ojson thread_json(const Threads& t) {
  ojson j;
  j["requested"] = t.requested ? ojson(*t.requested) : ojson(nullptr);
  j["used"] = t.used;
  return j;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

/// A single .tbkt file or every .tbkt file in a directory, sorted by name.
std::vector<std::string> bucket_paths(const std::string& path) {
  if (!fs::exists(path)) throw IoError("no such file or directory: " + path);
  if (!fs::is_directory(path)) return {path};
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".tbkt") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no .tbkt files in " + path);
  return out;
}

std::vector<SampleBucket> load_buckets(const std::string& path) {
  std::vector<SampleBucket> out;
  for (const auto& p : bucket_paths(path)) out.push_back(ingest_bucket(p));
  return out;
}

ConditionLabel checked_label(int month, int x, int y, int k) {
  if (month < 1 || month > 12) throw UsageError("--month must lie in 1..12");
  if (x < 1 || y < 1) throw UsageError("--x and --y must be >= 1");
  if (k < 0) throw UsageError("--k must be >= 0");
  return {static_cast<unsigned>(month), {x, y}, {k}};
}

ojson label_json(const ConditionLabel& l) {
  return {{"month", l.month}, {"x", l.region.x}, {"y", l.region.y}, {"k", l.period.k}};
}

// --- synth ----------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::uint32_t width = 8, height = 8;
  int first_year = 1979, years = 4;
  SyntheticConfig synthetic;
};

void cmd_synth(const SynthArgs& a, const Threads& threads, std::ostream& out) {
  if (a.years < 1) throw UsageError("--years must be >= 1");
  ensure_dir(a.out);
  const GridDataset ds = synthetic_grid(a.synthetic, a.width, a.height, a.first_year, a.years);
  const std::string grid = join(a.out, "grid.tgrd");
  export_grid(ds, grid);

  RunManifest m;
  m.command = "synth";
  m.config_json = ojson{{"width", a.width},
                        {"height", a.height},
                        {"first_year", a.first_year},
                        {"years", a.years},
                        {"base_year", a.synthetic.base_year},
                        {"lapse", a.synthetic.lapse},
                        {"day_sigma", a.synthetic.day_sigma},
                        {"noise_sigma", a.synthetic.noise_sigma},
                        {"threads", thread_json(threads)}}
                      .dump();
  m.seeds["synthetic"] = a.synthetic.seed;
  m.outputs = {grid};
  m.write(a.out);
  out << "wrote " << grid << " (" << ds.width << "x" << ds.height << ", " << ds.n_hours << " hours)\n";
}

// --- aggregate ------------------------------------------------------------------

struct AggregateArgs {
  std::string input, format, out;
  int base_year = 1979;
};

void cmd_aggregate(const AggregateArgs& a, const Threads& threads, std::ostream& out) {
  GridFormat format = GridFormat::binary;
  if (a.format == "csv" || (a.format.empty() && fs::path(a.input).extension() == ".csv")) format = GridFormat::csv;
  else if (!a.format.empty() && a.format != "binary") throw UsageError("--format must be binary or csv");

  const GridDataset ds = ingest_grid(a.input, format);
  const SpatialAggregation spatial = aggregate_spatial(ds);
  const TemporalAggregation temporal = aggregate_temporal(spatial, a.base_year);
  ensure_dir(a.out);

  RunManifest m;
  m.command = "aggregate";
  m.add_input(a.input);
  ojson summary;
  summary["regions"] = ojson::array();
  for (const auto& [index, stream] : spatial.regions) summary["regions"].push_back({index.x, index.y});
  summary["excluded_regions"] = ojson::array();
  for (const auto& r : spatial.excluded) summary["excluded_regions"].push_back({r.x, r.y});
  summary["dropped_columns"] = spatial.dropped_columns;
  summary["dropped_rows"] = spatial.dropped_rows;
  summary["complete_days"] = temporal.complete_days;
  summary["dropped_leading_hours"] = temporal.dropped_leading_hours;
  summary["dropped_trailing_hours"] = temporal.dropped_trailing_hours;
  summary["buckets"] = ojson::array();
  for (const auto& b : temporal.buckets) {
    const std::string name = bucket_file_name(b.label);
    export_bucket(b, join(a.out, name));
    m.outputs.push_back(join(a.out, name));
    ojson entry = label_json(b.label);
    entry["file"] = name;
    entry["samples"] = b.samples.size();
    summary["buckets"].push_back(entry);
  }
  const std::string summary_path = join(a.out, "summary.json");
  write_text(summary_path, summary.dump(2) + "\n");
  m.outputs.push_back(summary_path);
  m.config_json = ojson{{"format", format == GridFormat::csv ? "csv" : "binary"},
                        {"base_year", a.base_year},
                        {"threads", thread_json(threads)}}
                      .dump();
  m.write(a.out);

  out << spatial.regions.size() << " region(s), " << temporal.buckets.size() << " bucket(s), "
      << temporal.complete_days << " complete day(s)\n";
  if (temporal.dropped_leading_hours + temporal.dropped_trailing_hours > 0) {
    out << "dropped " << temporal.dropped_leading_hours << " leading and " << temporal.dropped_trailing_hours
        << " trailing hour(s) of partial days\n";
  }
  for (const auto& b : temporal.buckets) out << "  " << bucket_file_name(b.label) << "  " << b.samples.size() << "\n";
}

// --- train ----------------------------------------------------------------------

struct TrainArgs {
  std::string buckets, config, out;
  std::optional<long> epochs, checkpoint_every;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr, lr_g, lr_d, lambda_gp, lambda_tp;
  std::optional<int> n_critic, base_year;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant, nets;
};

TrainConfig resolve_train_config(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config.empty()) cfg = TrainConfig::from_json(read_text(a.config));
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.lr) cfg.lr_g = cfg.lr_d = *a.lr;
  if (a.lr_g) cfg.lr_g = *a.lr_g;
  if (a.lr_d) cfg.lr_d = *a.lr_d;
  if (a.n_critic) cfg.n_critic = *a.n_critic;
  if (a.seed) cfg.seed = *a.seed;
  if (a.variant) cfg.loss.variant = parse_loss_variant(*a.variant);
  if (a.lambda_gp) cfg.loss.lambda_gp = *a.lambda_gp;
  if (a.lambda_tp) cfg.loss.lambda_tp = *a.lambda_tp;
  if (a.base_year) cfg.base_year = *a.base_year;
  if (a.checkpoint_every) cfg.checkpoint_every = *a.checkpoint_every;
  if (a.nets) {
    if (*a.nets == "toy") cfg.nets = NetConfig::toy();
    else if (*a.nets == "paper") cfg.nets = NetConfig::paper();
    else throw UsageError("--nets must be toy or paper");
  }
  cfg.checkpoint_dir = join(a.out, "checkpoints");
  cfg.validate();
  return cfg;
}

void cmd_train(const TrainArgs& a, const Threads& threads, std::ostream& out) {
  const TrainConfig cfg = resolve_train_config(a);
  const auto raw = load_buckets(a.buckets);
  const auto [standardized, stats] = standardize(raw);
  ensure_dir(a.out);

  const TrainResult result = train(standardized, stats, cfg);
  const std::string ckpt = join(a.out, "checkpoint");
  save_checkpoint(result.generator, result.meta, ckpt);
  const std::string log_path = join(a.out, "train_log.csv");
  write_text(log_path, result.log.to_csv());

  RunManifest m;
  m.command = "train";
  ojson config = ojson::parse(cfg.to_json());
  config["threads"] = thread_json(threads);
  m.config_json = config.dump();
  m.seeds["root"] = cfg.seed;
  m.add_input(a.buckets);
  if (!a.config.empty()) m.add_input(a.config);
  m.outputs = {join(ckpt, "generator.tpar"), join(ckpt, "model.json"), log_path};
  m.write(a.out);

  out << "trained " << result.meta.epoch << " epoch(s), " << result.log.rows.size() << " step(s) on "
      << standardized.size() << " bucket(s); checkpoint " << ckpt << "\n";
  for (const auto& e : result.log.events) out << "  " << e << "\n";
  if (result.diverged) throw NumericalError("training aborted, last good checkpoint kept: " + result.abort_reason);
}

// --- sample ---------------------------------------------------------------------

struct SampleArgs {
  std::string ckpt, out;
  int month = 0, x = 1, y = 1, k = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

void cmd_sample(const SampleArgs& a, const Threads& threads, std::ostream& out) {
  const ConditionLabel label = checked_label(a.month, a.x, a.y, a.k);
  SampleBucket bucket{label, sample_conditioned(a.ckpt, label, a.n, a.seed)};
  ensure_dir(a.out);
  const std::string path = join(a.out, bucket_file_name(label));
  export_bucket(bucket, path);

  RunManifest m;
  m.command = "sample";
  m.config_json = ojson{{"label", label_json(label)}, {"n", a.n}, {"threads", thread_json(threads)}}.dump();
  m.seeds["sample"] = a.seed;
  m.add_input(a.ckpt);
  m.outputs = {path};
  m.write(a.out);
  out << "wrote " << a.n << " sample(s) to " << path << "\n";
}

// --- baseline -------------------------------------------------------------------

struct BaselineArgs {
  std::string buckets, out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

void cmd_baseline(const BaselineArgs& a, const Threads& threads, std::ostream& out) {
  const auto buckets = load_buckets(a.buckets);
  ensure_dir(a.out);
  RunManifest m;
  m.command = "baseline";
  m.add_input(a.buckets);
  std::mt19937_64 root(a.seed);
  for (const auto& b : buckets) {
    const HourlyGaussianModel model = fit_baseline(b);
    const std::string stem = bucket_file_name(b.label);
    const std::string json_path = join(a.out, "baseline_" + stem.substr(7, stem.size() - 12) + ".json");
    write_text(json_path, model.to_json());
    m.outputs.push_back(json_path);
    if (a.n > 0) {
      const std::string samples_dir = join(a.out, "samples");
      ensure_dir(samples_dir);
      const std::string path = join(samples_dir, stem);
      export_bucket({b.label, sample_baseline(model, a.n, root())}, path);
      m.outputs.push_back(path);
    }
    out << "fitted " << to_string(b.label) << " from " << b.samples.size() << " sample(s)\n";
  }
  m.config_json = ojson{{"n", a.n}, {"threads", thread_json(threads)}}.dump();
  m.seeds["root"] = a.seed;
  m.write(a.out);
}

// --- eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string metric, real, gen, ckpt, params = "{}", out;
  std::optional<std::size_t> n_gen;
  std::uint64_t seed = 0;
};

/// Reads and removes `key` from `params`, falling back to `fallback`.
template <class T>
T take(ojson& params, const std::string& key, T fallback) {
  if (!params.contains(key)) return fallback;
  try {
    T v = params.at(key).get<T>();
    params.erase(key);
    return v;
  } catch (const nlohmann::json::exception&) {
    throw UsageError("parameter '" + key + "' has the wrong type");
  }
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> grid(a);
  grid.insert(grid.end(), b.begin(), b.end());
  double worst = 0.0;
  for (double x : grid) {
    const double fa = double(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / double(a.size());
    const double fb = double(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / double(b.size());
    worst = std::max(worst, std::abs(fa - fb));
  }
  return worst;
}

void cmd_eval(const EvalArgs& a, const Threads& threads, std::ostream& out) {
  static const std::vector<std::string> metrics{"spacd", "fdtd", "tgdd", "qq", "ecdf", "extrema"};
  if (std::find(metrics.begin(), metrics.end(), a.metric) == metrics.end()) {
    throw UsageError("unknown metric '" + a.metric + "'");
  }
  if (a.gen.empty() == a.ckpt.empty()) throw UsageError("give exactly one of --gen and --ckpt");

  ojson params;
  try {
    params = ojson::parse(a.params);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("--params is not valid JSON: ") + e.what());
  }
  if (!params.is_object()) throw UsageError("--params must be a JSON object");
  static const std::map<std::string, std::vector<std::string>> accepted{
      {"spacd", {}}, {"fdtd", {"lo", "hi"}}, {"tgdd", {"bins"}},
      {"qq", {"realizations", "levels"}}, {"ecdf", {}}, {"extrema", {}}};
  for (const auto& [key, value] : params.items()) {
    const auto& keys = accepted.at(a.metric);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw UsageError("parameter '" + key + "' does not apply to metric " + a.metric);
    }
  }
  const ojson recorded_params = params;

  const SampleBucket real = ingest_bucket(a.real);
  if (real.samples.empty()) throw DataError("real corpus " + a.real + " holds no samples");
  const std::size_t n_gen = a.n_gen.value_or(real.samples.size());

  std::optional<LoadedCheckpoint> ckpt;
  if (!a.ckpt.empty()) {
    ckpt = load_checkpoint(a.ckpt);
    if (!ckpt->meta.stats) throw DataError("checkpoint " + a.ckpt + " has no standardization stats");
  }
  std::mt19937_64 root(a.seed);
  std::vector<TemperatureSample> gen;
  if (ckpt) {
    gen = generate_samples(ckpt->generator, *ckpt->meta.stats, real.label, n_gen, root());
  } else {
    SampleBucket g = ingest_bucket(a.gen);
    if (g.label != real.label) {
      throw DataError("label mismatch: real " + to_string(real.label) + ", generated " + to_string(g.label));
    }
    gen = std::move(g.samples);
  }
  if (gen.empty()) throw DataError("generated corpus holds no samples");

  ensure_dir(a.out);
  MetricReport report;
  report.metric = a.metric;
  report.label = real.label;
  report.n_real = real.samples.size();
  report.n_gen = gen.size();
  std::vector<std::string> outputs;

  if (a.metric == "spacd") {
    report.value = spacd(ppcc_matrix(real.samples), ppcc_matrix(gen));
  } else if (a.metric == "fdtd") {
    const double lo = take(params, "lo", kFdtdLowPercentile), hi = take(params, "hi", kFdtdHighPercentile);
    const FdtdResult r = fdtd(daily_means(real.samples), daily_means(gen), lo, hi);
    report.value = r.value;
    report.params = {{"lo", lo}, {"hi", hi}};
    report.details = {{"mu_r", r.mu_r},
                      {"sigma_r", r.sigma_r},
                      {"mu_g", r.mu_g},
                      {"sigma_g", r.sigma_g},
                      {"bulk_r", double(r.bulk_r)},
                      {"bulk_g", double(r.bulk_g)}};
  } else if (a.metric == "tgdd") {
    const auto bins = take<std::int64_t>(params, "bins", 10);
    if (bins < 1) throw UsageError("bins must be >= 1");
    const TgddResult r = tgdd(real.samples, gen, static_cast<std::size_t>(bins));
    report.value = r.value;
    report.params = {{"bins", bins}};
    report.details = {{"effective_bins", double(r.effective_bins)}};
    outputs.push_back(join(a.out, "tgdd_histogram.csv"));
    write_histogram_csv(r, outputs.back());
  } else if (a.metric == "qq") {
    const auto realizations = take<std::int64_t>(params, "realizations", 100);
    if (realizations < 1) throw UsageError("realizations must be >= 1");
    const auto levels = take(params, "levels", default_qq_levels());
    const auto real_values = pooled_values(real.samples);
    const std::uint64_t qq_seed = root();
    RealizationSampler sampler;
    if (ckpt) {
      // Each realization is a fresh draw of bucket size from the generator.
      sampler = [&](std::uint64_t seed) {
        return pooled_values(generate_samples(ckpt->generator, *ckpt->meta.stats, real.label, real.samples.size(), seed));
      };
    } else {
      // A fixed generated corpus: realizations resample its days with replacement.
      sampler = [&](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, gen.size() - 1);
        std::vector<TemperatureSample> draw;
        for (std::size_t i = 0; i < real.samples.size(); ++i) draw.push_back(gen[pick(rng)]);
        return pooled_values(draw);
      };
    }
    const QQEnvelope env = qq_envelope(real_values, sampler, static_cast<std::size_t>(realizations), levels, qq_seed);
    report.value = env.median_offset();
    report.params = {{"realizations", realizations}, {"levels", std::int64_t(levels.size())},
                     {"sampler", std::string(ckpt ? "checkpoint" : "bootstrap")}};
    report.details = {{"identity_coverage", env.identity_coverage()}};
    outputs.push_back(join(a.out, "qq.csv"));
    write_qq_csv(env, outputs.back());
  } else if (a.metric == "ecdf") {
    const auto rv = pooled_values(real.samples), gv = pooled_values(gen);
    report.value = ks_distance(rv, gv);
    outputs.push_back(join(a.out, "ecdf_real.csv"));
    write_ecdf_csv(ecdf(rv), outputs.back());
    outputs.push_back(join(a.out, "ecdf_gen.csv"));
    write_ecdf_csv(ecdf(gv), outputs.back());
  } else {
    const auto er = daily_extrema(real.samples), eg = daily_extrema(gen);
    const auto mean_of = [](const auto& v, auto field) {
      double s = 0.0;
      for (const auto& p : v) s += field(p);
      return s / double(v.size());
    };
    const auto tmax = [](const std::pair<double, double>& p) { return p.first; };
    const auto tmin = [](const std::pair<double, double>& p) { return p.second; };
    const double range_r = mean_of(er, tmax) - mean_of(er, tmin);
    const double range_g = mean_of(eg, tmax) - mean_of(eg, tmin);
    report.value = range_g - range_r;
    report.details = {{"mean_tmax_real", mean_of(er, tmax)},
                      {"mean_tmin_real", mean_of(er, tmin)},
                      {"mean_tmax_gen", mean_of(eg, tmax)},
                      {"mean_tmin_gen", mean_of(eg, tmin)}};
    outputs.push_back(join(a.out, "extrema_real.csv"));
    write_extrema_csv(er, outputs.back());
    outputs.push_back(join(a.out, "extrema_gen.csv"));
    write_extrema_csv(eg, outputs.back());
  }
  const std::string report_path = join(a.out, "report.json");
  write_text(report_path, report.to_json());
  outputs.insert(outputs.begin(), report_path);

  RunManifest m;
  m.command = "eval";
  m.config_json = ojson{{"metric", a.metric}, {"params", recorded_params}, {"n_gen", n_gen},
                        {"threads", thread_json(threads)}}
                      .dump();
  m.seeds["root"] = a.seed;
  m.add_input(a.real);
  m.add_input(ckpt ? a.ckpt : a.gen);
  m.outputs = outputs;
  m.write(a.out);
  out << a.metric << " = " << report.value << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional generation and evaluation of hourly 2m temperature fields"};
  app.require_subcommand(1);
  app.set_version_flag("--version", artifact_version());

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic diurnal-temperature grid");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--width", synth.width, "Grid width in cells")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--height", synth.height, "Grid height in cells")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--first-year", synth.first_year, "First calendar year")->capture_default_str();
  s->add_option("--years", synth.years, "Number of calendar years")->capture_default_str();
  s->add_option("--base-year", synth.synthetic.base_year, "Year of period k = 0")->capture_default_str();
  s->add_option("--lapse", synth.synthetic.lapse, "Kelvin per cell step")->capture_default_str();
  s->add_option("--day-sigma", synth.synthetic.day_sigma, "Daily anomaly std (K)")->capture_default_str();
  s->add_option("--noise", synth.synthetic.noise_sigma, "Per-cell noise std (K)")->capture_default_str();
  s->add_option("--seed", synth.synthetic.seed, "Random seed")->capture_default_str();

  AggregateArgs agg;
  auto* ag = app.add_subcommand("aggregate", "Cut a grid into labelled daily sample buckets");
  ag->add_option("--input", agg.input, "Grid file (.tgrd or .csv)")->required();
  ag->add_option("--format", agg.format, "binary or csv (default: from the extension)");
  ag->add_option("--base-year", agg.base_year, "Year of period k = 0")->capture_default_str();
  ag->add_option("--out", agg.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the conditional generator");
  t->add_option("--buckets", tr.buckets, "Bucket file or directory of .tbkt files")->required();
  t->add_option("--config", tr.config, "JSON training config; flags override it");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--epochs", tr.epochs);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--lr", tr.lr, "Learning rate for both networks");
  t->add_option("--lr-g", tr.lr_g);
  t->add_option("--lr-d", tr.lr_d);
  t->add_option("--n-critic", tr.n_critic);
  t->add_option("--seed", tr.seed);
  t->add_option("--variant", tr.variant, "dual_critic or ex_wgan_tgp");
  t->add_option("--lambda-gp", tr.lambda_gp);
  t->add_option("--lambda-tp", tr.lambda_tp);
  t->add_option("--nets", tr.nets, "toy or paper");
  t->add_option("--base-year", tr.base_year);
  t->add_option("--checkpoint-every", tr.checkpoint_every);

  SampleArgs sa;
  auto* sp = app.add_subcommand("sample", "Draw conditioned samples from a checkpoint");
  sp->add_option("--ckpt", sa.ckpt, "Checkpoint directory")->required();
  sp->add_option("--month", sa.month)->required();
  sp->add_option("--x", sa.x)->capture_default_str();
  sp->add_option("--y", sa.y)->capture_default_str();
  sp->add_option("--k", sa.k)->capture_default_str();
  sp->add_option("--n", sa.n, "Number of samples")->required();
  sp->add_option("--seed", sa.seed)->capture_default_str();
  sp->add_option("--out", sa.out, "Output directory")->required();

  BaselineArgs ba;
  auto* b = app.add_subcommand("baseline", "Fit the per-hour Gaussian baseline");
  b->add_option("--buckets", ba.buckets, "Bucket file or directory of .tbkt files")->required();
  b->add_option("--out", ba.out, "Output directory")->required();
  b->add_option("--n", ba.n, "Also draw this many samples per bucket")->capture_default_str();
  b->add_option("--seed", ba.seed)->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compare a generated corpus with ground truth");
  e->add_option("--metric", ev.metric, "spacd, fdtd, tgdd, qq, ecdf or extrema")->required();
  e->add_option("--real", ev.real, "Ground-truth bucket file")->required();
  e->add_option("--gen", ev.gen, "Generated bucket file");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint to sample instead of --gen");
  e->add_option("--params", ev.params, "Metric parameters as a JSON object")->capture_default_str();
  e->add_option("--n-gen", ev.n_gen, "Samples drawn from --ckpt (default: real count)");
  e->add_option("--seed", ev.seed)->capture_default_str();
  e->add_option("--out", ev.out, "Output directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return UsageError("").exit_code();
  }

  try {
    const Threads threads = read_thread_env();
    if (s->parsed()) cmd_synth(synth, threads, out);
    else if (ag->parsed()) cmd_aggregate(agg, threads, out);
    else if (t->parsed()) cmd_train(tr, threads, out);
    else if (sp->parsed()) cmd_sample(sa, threads, out);
    else if (b->parsed()) cmd_baseline(ba, threads, out);
    else cmd_eval(ev, threads, out);
    return 0;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return ex.exit_code();
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace tempgen::cli
