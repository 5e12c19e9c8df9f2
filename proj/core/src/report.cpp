#include "tempgen/report.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "tempgen/binary_io.hpp"
#include "tempgen/error.hpp"

namespace tempgen {

std::string artifact_version() { return TEMPGEN_VERSION; }

namespace {

nlohmann::ordered_json label_json(const ConditionLabel& l) {
  return {{"month", l.month}, {"x", l.region.x}, {"y", l.region.y}, {"k", l.period.k}};
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericalError(what + " is not finite");
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << std::setprecision(17);
  return out;
}

void close_csv(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

std::string MetricReport::to_json() const {
  require_finite(value, metric + " value");
  nlohmann::ordered_json j;
  j["metric"] = metric;
  j["value"] = value;
  auto params_json = nlohmann::ordered_json::object();
  for (const auto& [key, v] : params) {
    std::visit([&](const auto& x) { params_json[key] = x; }, v);
  }
  j["params"] = params_json;
  j["label"] = label ? label_json(*label) : nlohmann::ordered_json(nullptr);
  j["n_real"] = n_real;
  j["n_gen"] = n_gen;
  j["artifact_version"] = artifact_version();
  auto details_json = nlohmann::ordered_json::object();
  for (const auto& [key, v] : details) {
    require_finite(v, metric + " " + key);
    details_json[key] = v;
  }
  j["details"] = details_json;
  return j.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_qq_csv(const QQEnvelope& env, const std::string& path) {
  auto out = open_csv(path);
  out << "level,gt_q,lo,hi\n";
  for (std::size_t i = 0; i < env.levels.size(); ++i) {
    out << env.levels[i] << ',' << env.ground_truth[i] << ',' << env.low[i] << ',' << env.high[i] << '\n';
  }
  close_csv(out, path);
}

void write_ecdf_csv(const std::vector<std::pair<double, double>>& points, const std::string& path) {
  auto out = open_csv(path);
  out << "value,probability\n";
  for (const auto& [v, p] : points) out << v << ',' << p << '\n';
  close_csv(out, path);
}

void write_histogram_csv(const TgddResult& result, const std::string& path) {
  auto out = open_csv(path);
  out << "bin,lower,upper,real_mass,gen_mass\n";
  for (std::size_t i = 0; i < result.effective_bins; ++i) {
    out << i << ',' << result.edges[i] << ',' << result.edges[i + 1] << ',' << result.p[i] << ',' << result.q[i]
        << '\n';
  }
  close_csv(out, path);
}

void write_extrema_csv(const std::vector<std::pair<double, double>>& extrema, const std::string& path) {
  auto out = open_csv(path);
  out << "sample,tmax,tmin\n";
  for (std::size_t i = 0; i < extrema.size(); ++i) {
    out << i << ',' << extrema[i].first << ',' << extrema[i].second << '\n';
  }
  close_csv(out, path);
}

void RunManifest::add_input(const std::string& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs[f] = io::file_fingerprint(f);
  } else {
    inputs[path] = io::file_fingerprint(path);
  }
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  try {
    j["config"] = nlohmann::ordered_json::parse(config_json);
  } catch (const nlohmann::json::exception&) {
    j["config"] = config_json;
  }
  j["seeds"] = seeds;
  j["inputs"] = inputs;
  j["artifact_version"] = artifact_version();
  j["outputs"] = outputs;
  j["timestamp"] = timestamp;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& dir) {
  if (timestamp.empty()) {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    timestamp = os.str();
  }
  write_text((std::filesystem::path(dir) / "manifest.json").string(), to_json());
}

}  // namespace tempgen
