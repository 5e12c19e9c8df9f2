#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "tempgen/tensor.hpp"

namespace tempgen {

/// Named learnable tensors plus non-learned buffers (BatchNorm running
/// statistics). Names are unique; iteration order is lexicographic.
class ParameterSet {
 public:
  /// Registers a learnable tensor (grad tracking on). Throws on duplicates.
  Tensor& add(const std::string& name, Tensor value);
  /// Registers a buffer: persisted, not learned, not counted.
  Tensor& add_buffer(const std::string& name, Tensor value);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::map<std::string, Tensor>& parameters() const { return params_; }
  std::map<std::string, Tensor>& parameters() { return params_; }
  const std::map<std::string, Tensor>& buffers() const { return buffers_; }

  std::size_t parameter_count() const;
  /// Count restricted to names starting with `prefix`.
  std::size_t parameter_count(const std::string& prefix) const;

  void zero_grad();

  /// Overwrites values (not identity) from `other`; names and shapes must match.
  void copy_values_from(const ParameterSet& other);

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> buffers_;
};

/// TPAR: "TPAR", u16 version, u32 entry count, then per entry sorted by
/// name: u8 kind (0 parameter, 1 buffer), name, u32 rank, u32 dims, f32 data.
void save_tpar(const ParameterSet& params, const std::string& path);
/// Loads values into an existing set; every stored entry must exist with
/// the same shape and every entry of `params` must be stored.
void load_tpar(ParameterSet& params, const std::string& path);

}  // namespace tempgen
