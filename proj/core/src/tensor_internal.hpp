#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tempgen/tensor.hpp"

namespace tempgen::detail {

struct Node {
  std::string op;
  std::vector<Tensor> inputs;
  BackwardFn backward;
  bool consumed = false;
};

struct Access {
  static const std::shared_ptr<TensorImpl>& impl(const Tensor& t) { return t.impl_; }
  static Tensor wrap(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }
};

struct Propagation {
  std::vector<Tensor> order;  // inputs before consumers
  std::unordered_map<const TensorImpl*, Tensor> grads;
};

/// Reverse sweep from a one-element root. Runs with history recording set to
/// `create_graph`.
Propagation propagate(const Tensor& root, bool create_graph);

}  // namespace tempgen::detail
