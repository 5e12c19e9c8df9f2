#pragma once

// Dense row-major tensors with reverse-mode differentiation.
//
// Every backward rule is itself written in terms of differentiable ops, so
// gradients computed with `create_graph = true` can be differentiated again.
// The gradient penalty relies on this.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tempgen {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tensor;

namespace detail {

struct Node;
struct Access;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::shared_ptr<Node> grad_fn;
  std::shared_ptr<TensorImpl> grad;  // accumulated by backward() on leaves
};

using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_output)>;

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double value);
  static Tensor scalar(double value);
  static Tensor from(const Shape& shape, std::vector<double> data);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Mutable access; only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_data();
  double operator[](std::size_t i) const { return impl_->data[i]; }
  /// Value of a one-element tensor.
  double item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on = true);
  bool is_leaf() const;

  /// Gradient accumulated by backward(); undefined until then.
  Tensor grad() const;
  void zero_grad();

  /// Shares storage, drops history.
  Tensor detach() const;
  Tensor clone() const;

  /// Accumulates d(this)/d(leaf) into every reachable leaf that requires
  /// grad. `this` must hold one element. A second call on the same graph
  /// root throws.
  void backward() const;

  const detail::TensorImpl* id() const { return impl_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;

  friend struct detail::Access;
};

/// Builds an op result; attaches history when grad mode is on and any input
/// requires grad.
Tensor make_result(std::string op, const Shape& shape, std::vector<double> data,
                   std::vector<Tensor> inputs, detail::BackwardFn backward);

/// d(output)/d(inputs[i]). `output` must hold one element. With
/// `create_graph` the returned tensors carry history and can be
/// differentiated again. Inputs the output does not depend on get zeros.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs,
                         bool create_graph = false);

/// Thread-local switch for history recording.
bool grad_mode_enabled();

class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

struct NoGradGuard : GradModeGuard {
  NoGradGuard() : GradModeGuard(false) {}
};

// ---------------------------------------------------------------------------
// Ops. Binary elementwise ops require identical shapes; broadcasting is
// explicit through broadcast_channel / broadcast_rows / expand.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor tanh(const Tensor& a);
/// Derivative at exactly 0 takes the positive-side slope.
Tensor leaky_relu(const Tensor& a, double slope);
Tensor relu(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

/// op(a) . op(b) for 2-D tensors; op transposes when the flag is set.
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false, bool transpose_b = false);
/// x (N, in) . W(out, in)^T + b(out)
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct Conv2dGeometry {
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_h = 0, pad_w = 0;
};

/// Cross-correlation: x (N,C,H,W), w (O,C,KH,KW) -> (N,O,H',W').
Tensor conv2d(const Tensor& x, const Tensor& w, const Conv2dGeometry& geom = {});
/// Adjoint of conv2d in x; `input_shape` resolves stride ambiguity.
Tensor conv2d_input_grad(const Tensor& g, const Tensor& w, const Conv2dGeometry& geom,
                         const Shape& input_shape);
/// Adjoint of conv2d in w.
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& g, const Conv2dGeometry& geom,
                          const Shape& weight_shape);

/// x (N,C,L), w (O,C,K) -> (N,O,(L-K)/stride+1).
Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride = 1);
/// x (N,C,L), w (C,O,K) -> (N,O,L+K-1).
Tensor conv_transpose1d(const Tensor& x, const Tensor& w);

/// b (C) broadcast over axis 1 of `shape` (N,C,...).
Tensor broadcast_channel(const Tensor& b, const Shape& shape);
/// Sum over every axis except 1: (N,C,...) -> (C).
Tensor channel_sum(const Tensor& x);
Tensor add_channel(const Tensor& x, const Tensor& b);

/// r (N) broadcast over the trailing axes of `shape`.
Tensor broadcast_rows(const Tensor& r, const Shape& shape);
/// Sum over every axis except 0: (N,...) -> (N).
Tensor row_sum(const Tensor& x);
/// Per-sample Euclidean norm over all non-batch axes: (N,...) -> (N).
Tensor row_norm(const Tensor& x);

Tensor reshape(const Tensor& x, const Shape& shape);
/// (N, ...) -> (N, prod(...))
Tensor flatten(const Tensor& x);
Tensor unsqueeze(const Tensor& x, std::size_t axis);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);

/// Full reductions to a rank-0 tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Euclidean norm of all elements.
Tensor l2_norm(const Tensor& x);
/// Rank-0 `s` broadcast to `shape`.
Tensor expand(const Tensor& s, const Shape& shape);

struct BatchNormState {
  Tensor running_mean;  // (C)
  Tensor running_var;   // (C), unbiased batch variance
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel normalisation over (N, spatial...). In training mode uses
/// batch statistics and updates `state`; otherwise uses the running stats.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  bool training);

}  // namespace tempgen
