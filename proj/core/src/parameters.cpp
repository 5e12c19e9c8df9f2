#include "tempgen/parameters.hpp"

#include <cstdint>
#include <fstream>
#include <set>

#include "tempgen/binary_io.hpp"
#include "tempgen/error.hpp"

namespace tempgen {

namespace {
constexpr std::uint16_t kTparVersion = 1;
}

Tensor& ParameterSet::add(const std::string& name, Tensor value) {
  if (params_.count(name) || buffers_.count(name)) throw Error("duplicate parameter name: " + name);
  value.set_requires_grad(true);
  return params_.emplace(name, std::move(value)).first->second;
}

Tensor& ParameterSet::add_buffer(const std::string& name, Tensor value) {
  if (params_.count(name) || buffers_.count(name)) throw Error("duplicate parameter name: " + name);
  return buffers_.emplace(name, std::move(value)).first->second;
}

Tensor& ParameterSet::at(const std::string& name) {
  if (auto it = params_.find(name); it != params_.end()) return it->second;
  if (auto it = buffers_.find(name); it != buffers_.end()) return it->second;
  throw Error("unknown parameter: " + name);
}

const Tensor& ParameterSet::at(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::contains(const std::string& name) const {
  return params_.count(name) || buffers_.count(name);
}

std::size_t ParameterSet::parameter_count() const { return parameter_count(""); }

std::size_t ParameterSet::parameter_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) n += t.numel();
  }
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  auto copy = [](std::map<std::string, Tensor>& dst, const std::map<std::string, Tensor>& src) {
    if (dst.size() != src.size()) throw Error("parameter sets differ in size");
    for (auto& [name, t] : dst) {
      auto it = src.find(name);
      if (it == src.end() || it->second.shape() != t.shape()) {
        throw Error("parameter sets differ at " + name);
      }
      auto out = t.mutable_data();
      const auto in = it->second.data();
      std::copy(in.begin(), in.end(), out.begin());
    }
  };
  copy(params_, other.params_);
  copy(buffers_, other.buffers_);
}

void save_tpar(const ParameterSet& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  std::map<std::string, std::pair<std::uint8_t, const Tensor*>> entries;
  for (const auto& [name, t] : params.parameters()) entries[name] = {0, &t};
  for (const auto& [name, t] : params.buffers()) entries[name] = {1, &t};
  io::write_magic(out, "TPAR");
  io::write_u16(out, kTparVersion);
  io::write_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, entry] : entries) {
    const Tensor& t = *entry.second;
    out.put(static_cast<char>(entry.first));
    io::write_string(out, name);
    io::write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) io::write_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) io::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw IoError("write failed: " + path);
}

void load_tpar(ParameterSet& params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  io::expect_magic(in, "TPAR", path);
  const auto version = io::read_u16(in, path);
  if (version != kTparVersion) throw DataError(path + ": unsupported TPAR version " + std::to_string(version));
  const auto count = io::read_u32(in, path);
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    char kind = 0;
    if (!in.get(kind)) throw DataError(path + ": truncated entry");
    const std::string name = io::read_string(in, path);
    const auto rank = io::read_u32(in, path);
    Shape shape(rank);
    for (auto& d : shape) d = io::read_u32(in, path);
    if (!params.contains(name)) throw DataError(path + ": unexpected entry " + name);
    Tensor& t = params.at(name);
    if (t.shape() != shape) {
      throw DataError(path + ": shape mismatch for " + name + ", file " + to_string(shape) + " vs model " +
                      to_string(t.shape()));
    }
    auto dst = t.mutable_data();
    for (auto& v : dst) v = io::read_f32(in, path);
    seen.insert(name);
  }
  for (const auto& [name, t] : params.parameters()) {
    if (!seen.count(name)) throw DataError(path + ": missing entry " + name);
  }
  for (const auto& [name, t] : params.buffers()) {
    if (!seen.count(name)) throw DataError(path + ": missing entry " + name);
  }
}

}  // namespace tempgen
