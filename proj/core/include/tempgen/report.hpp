#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tempgen/grid_store.hpp"
#include "tempgen/metrics.hpp"

namespace tempgen {

std::string artifact_version();

using ReportParam = std::variant<double, std::int64_t, std::string>;

/// Serialised as {metric, value, params, label:{month,x,y,k}, n_real, n_gen,
/// artifact_version, details}. Contains no timestamp so identical inputs
/// give identical bytes; the run manifest carries the time.
struct MetricReport {
  std::string metric;
  double value = 0.0;
  std::vector<std::pair<std::string, ReportParam>> params;
  std::optional<ConditionLabel> label;
  std::size_t n_real = 0;
  std::size_t n_gen = 0;
  std::vector<std::pair<std::string, double>> details;

  /// Throws NumericalError on non-finite values.
  std::string to_json() const;
};

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// level,gt_q,lo,hi
void write_qq_csv(const QQEnvelope& env, const std::string& path);
/// value,probability
void write_ecdf_csv(const std::vector<std::pair<double, double>>& points, const std::string& path);
/// bin,lower,upper,real_mass,gen_mass
void write_histogram_csv(const TgddResult& result, const std::string& path);
/// sample,tmax,tmin
void write_extrema_csv(const std::vector<std::pair<double, double>>& extrema, const std::string& path);

struct RunManifest {
  std::string command;
  std::string config_json = "{}";
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> inputs;  // path -> FNV-1a digest
  std::vector<std::string> outputs;
  std::string timestamp;  // ISO-8601 UTC, filled by write() when empty

  void add_input(const std::string& path);
  std::string to_json() const;
  /// Writes <dir>/manifest.json.
  void write(const std::string& dir);
};

}  // namespace tempgen
