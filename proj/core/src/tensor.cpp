#include "tempgen/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "tempgen/error.hpp"
#include "tensor_internal.hpp"

namespace tempgen {

namespace {
thread_local bool g_grad_mode = true;
}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

bool grad_mode_enabled() { return g_grad_mode; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_mode) { g_grad_mode = enabled; }
GradModeGuard::~GradModeGuard() { g_grad_mode = previous_; }

// --- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(const Shape& shape) { return full(shape, 0.0); }

Tensor Tensor::full(const Shape& shape, double value) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->data.assign(tempgen::numel(shape), value);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return full({}, value); }

Tensor Tensor::from(const Shape& shape, std::vector<double> data) {
  if (data.size() != tempgen::numel(shape)) {
    throw ShapeError("Tensor::from: " + std::to_string(data.size()) + " values for shape " +
                     to_string(shape));
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  return Tensor(std::move(impl));
}

const Shape& Tensor::shape() const {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return tempgen::numel(shape()); }

std::span<const double> Tensor::data() const {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!impl_) throw Error("use of undefined tensor");
  return impl_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  if (!impl_) throw Error("use of undefined tensor");
  if (impl_->grad_fn) throw Error("requires_grad can only be set on leaf tensors");
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::is_leaf() const { return impl_ && !impl_->grad_fn; }

Tensor Tensor::grad() const {
  if (!impl_ || !impl_->grad) return {};
  return Tensor(impl_->grad);
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.reset();
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape();
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const { return detach(); }

// --- graph construction -------------------------------------------------------

Tensor make_result(std::string op, const Shape& shape, std::vector<double> data,
                   std::vector<Tensor> inputs, detail::BackwardFn backward) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  const bool track = g_grad_mode && std::any_of(inputs.begin(), inputs.end(),
                                                [](const Tensor& t) { return t.requires_grad(); });
  if (track) {
    impl->requires_grad = true;
    impl->grad_fn = std::make_shared<detail::Node>(
        detail::Node{std::move(op), std::move(inputs), std::move(backward), false});
  }
  return detail::Access::wrap(std::move(impl));
}

namespace detail {

namespace {

// Post-order over tensors that require grad: inputs precede their consumers.
std::vector<Tensor> topological_order(const Tensor& root) {
  std::vector<Tensor> order;
  std::unordered_map<const TensorImpl*, bool> visited;
  struct Frame {
    Tensor t;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited[root.id()] = true;
  while (!stack.empty()) {
    Frame& top = stack.back();
    const auto& impl = Access::impl(top.t);
    if (impl->grad_fn && top.next < impl->grad_fn->inputs.size()) {
      const Tensor child = impl->grad_fn->inputs[top.next++];
      if (child.requires_grad() && !visited[child.id()]) {
        visited[child.id()] = true;
        stack.push_back({child, 0});
      }
      continue;
    }
    order.push_back(top.t);
    stack.pop_back();
  }
  return order;
}

}  // namespace

Propagation propagate(const Tensor& root, bool create_graph) {
  if (root.numel() != 1) {
    throw ShapeError("gradient root must hold one element, got shape " + to_string(root.shape()));
  }
  Propagation result;
  if (!root.requires_grad()) return result;

  GradModeGuard mode(create_graph);
  result.order = topological_order(root);
  const auto& order = result.order;
  auto& grads = result.grads;
  grads[root.id()] = Tensor::full(root.shape(), 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& impl = Access::impl(*it);
    if (!impl->grad_fn) continue;
    const auto found = grads.find(impl.get());
    if (found == grads.end()) continue;
    const Node& node = *impl->grad_fn;
    const auto input_grads = node.backward(found->second);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const Tensor& input = node.inputs[i];
      if (!input.requires_grad() || i >= input_grads.size() || !input_grads[i].defined()) continue;
      if (input_grads[i].shape() != input.shape()) {
        throw ShapeError(node.op + " backward produced gradient of shape " +
                         to_string(input_grads[i].shape()) + " for input of shape " +
                         to_string(input.shape()));
      }
      auto slot = grads.find(input.id());
      if (slot == grads.end()) {
        grads.emplace(input.id(), input_grads[i]);
      } else {
        slot->second = add(slot->second, input_grads[i]);
      }
    }
  }
  return result;
}

}  // namespace detail

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs, bool create_graph) {
  for (const auto& in : inputs) {
    if (!in.requires_grad()) throw Error("grad: input tensor is not tracked (requires_grad is off)");
  }
  const auto grads = detail::propagate(output, create_graph).grads;
  std::vector<Tensor> result;
  result.reserve(inputs.size());
  for (const auto& in : inputs) {
    auto found = grads.find(in.id());
    result.push_back(found == grads.end() ? Tensor::zeros(in.shape()) : found->second);
  }
  return result;
}

void Tensor::backward() const {
  if (impl_ && impl_->grad_fn) {
    if (impl_->grad_fn->consumed) {
      throw Error("backward called twice on the same graph; rebuild the graph first");
    }
    impl_->grad_fn->consumed = true;
  }
  const auto prop = detail::propagate(*this, false);
  const auto& grads = prop.grads;
  for (const auto& t : prop.order) {
    const auto& impl = detail::Access::impl(t);
    if (impl->grad_fn || !impl->requires_grad) continue;
    const auto found = grads.find(impl.get());
    if (found == grads.end()) continue;
    const auto& g = found->second.data();
    if (!impl->grad) {
      impl->grad = std::make_shared<detail::TensorImpl>();
      impl->grad->shape = impl->shape;
      impl->grad->data.assign(g.begin(), g.end());
    } else {
      auto& acc = impl->grad->data;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
  }
}

}  // namespace tempgen
