#include <algorithm>
#include <cmath>

#include "tempgen/error.hpp"
#include "tempgen/tensor.hpp"
#include "tensor_internal.hpp"

namespace tempgen {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     to_string(t.shape()));
  }
}

template <class F>
std::vector<double> map_unary(const Tensor& a, F f) {
  const auto src = a.data();
  std::vector<double> out(src.size());
  std::transform(src.begin(), src.end(), out.begin(), f);
  return out;
}

template <class F>
std::vector<double> map_binary(const Tensor& a, const Tensor& b, F f) {
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i], y[i]);
  return out;
}

// (outer, axis, inner) factorisation of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// --- convolution kernels ------------------------------------------------------

struct ConvDims {
  std::size_t n, c, h, w;      // input
  std::size_t o, kh, kw;       // weight
  std::size_t oh, ow;          // output
};

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad,
                     const char* op) {
  if (in + 2 * pad < k) {
    throw ShapeError(std::string(op) + ": kernel " + std::to_string(k) + " larger than padded input " +
                     std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - k) / stride + 1;
}

ConvDims conv_dims(const Shape& x, const Shape& w, const Conv2dGeometry& g, const char* op) {
  if (x.size() != 4 || w.size() != 4) {
    throw ShapeError(std::string(op) + ": expected 4-D input and weight, got " + to_string(x) +
                     " and " + to_string(w));
  }
  if (x[1] != w[1]) {
    throw ShapeError(std::string(op) + ": input channels " + to_string(x) +
                     " do not match weight " + to_string(w));
  }
  if (g.stride_h == 0 || g.stride_w == 0) throw ShapeError(std::string(op) + ": zero stride");
  ConvDims d{x[0], x[1], x[2], x[3], w[0], w[2], w[3], 0, 0};
  d.oh = conv_out(d.h, d.kh, g.stride_h, g.pad_h, op);
  d.ow = conv_out(d.w, d.kw, g.stride_w, g.pad_w, op);
  return d;
}

// Valid output range [lo, hi) along one axis for kernel offset k so that
// in = out*stride + k - pad lies in [0, in_len).
std::pair<std::size_t, std::size_t> valid_range(std::size_t out_len, std::size_t in_len, std::size_t k,
                                                 std::size_t stride, std::size_t pad) {
  std::size_t lo = 0;
  if (k < pad) lo = (pad - k + stride - 1) / stride;
  // out*stride + k - pad <= in_len - 1
  std::size_t hi = 0;
  if (in_len + pad > k) hi = std::min(out_len, (in_len - 1 + pad - k) / stride + 1);
  if (hi < lo) hi = lo;
  return {lo, hi};
}

std::vector<double> conv_forward(std::span<const double> x, std::span<const double> w,
                                 const ConvDims& d, const Conv2dGeometry& g) {
  std::vector<double> y(d.n * d.o * d.oh * d.ow, 0.0);
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t o = 0; o < d.o; ++o) {
      double* out = &y[((n * d.o) + o) * d.oh * d.ow];
      for (std::size_t c = 0; c < d.c; ++c) {
        const double* in = &x[((n * d.c) + c) * d.h * d.w];
        const double* ker = &w[((o * d.c) + c) * d.kh * d.kw];
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
          const auto [y0, y1] = valid_range(d.oh, d.h, ky, g.stride_h, g.pad_h);
          for (std::size_t kx = 0; kx < d.kw; ++kx) {
            const auto [x0, x1] = valid_range(d.ow, d.w, kx, g.stride_w, g.pad_w);
            const double wv = ker[ky * d.kw + kx];
            for (std::size_t oy = y0; oy < y1; ++oy) {
              const double* row = in + (oy * g.stride_h + ky - g.pad_h) * d.w;
              double* orow = out + oy * d.ow;
              for (std::size_t ox = x0; ox < x1; ++ox) {
                orow[ox] += wv * row[ox * g.stride_w + kx - g.pad_w];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

std::vector<double> conv_backward_input(std::span<const double> gy, std::span<const double> w,
                                        const ConvDims& d, const Conv2dGeometry& g) {
  std::vector<double> gx(d.n * d.c * d.h * d.w, 0.0);
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t c = 0; c < d.c; ++c) {
      double* dst = &gx[((n * d.c) + c) * d.h * d.w];
      for (std::size_t o = 0; o < d.o; ++o) {
        const double* src = &gy[((n * d.o) + o) * d.oh * d.ow];
        const double* ker = &w[((o * d.c) + c) * d.kh * d.kw];
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
          const auto [y0, y1] = valid_range(d.oh, d.h, ky, g.stride_h, g.pad_h);
          for (std::size_t kx = 0; kx < d.kw; ++kx) {
            const auto [x0, x1] = valid_range(d.ow, d.w, kx, g.stride_w, g.pad_w);
            const double wv = ker[ky * d.kw + kx];
            for (std::size_t oy = y0; oy < y1; ++oy) {
              double* row = dst + (oy * g.stride_h + ky - g.pad_h) * d.w;
              const double* grow = src + oy * d.ow;
              for (std::size_t ox = x0; ox < x1; ++ox) {
                row[ox * g.stride_w + kx - g.pad_w] += wv * grow[ox];
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

std::vector<double> conv_backward_weight(std::span<const double> x, std::span<const double> gy,
                                         const ConvDims& d, const Conv2dGeometry& g) {
  std::vector<double> gw(d.o * d.c * d.kh * d.kw, 0.0);
  for (std::size_t o = 0; o < d.o; ++o) {
    for (std::size_t c = 0; c < d.c; ++c) {
      double* ker = &gw[((o * d.c) + c) * d.kh * d.kw];
      for (std::size_t ky = 0; ky < d.kh; ++ky) {
        const auto [y0, y1] = valid_range(d.oh, d.h, ky, g.stride_h, g.pad_h);
        for (std::size_t kx = 0; kx < d.kw; ++kx) {
          const auto [x0, x1] = valid_range(d.ow, d.w, kx, g.stride_w, g.pad_w);
          double acc = 0.0;
          for (std::size_t n = 0; n < d.n; ++n) {
            const double* in = &x[((n * d.c) + c) * d.h * d.w];
            const double* src = &gy[((n * d.o) + o) * d.oh * d.ow];
            for (std::size_t oy = y0; oy < y1; ++oy) {
              const double* row = in + (oy * g.stride_h + ky - g.pad_h) * d.w;
              const double* grow = src + oy * d.ow;
              for (std::size_t ox = x0; ox < x1; ++ox) {
                acc += grow[ox] * row[ox * g.stride_w + kx - g.pad_w];
              }
            }
          }
          ker[ky * d.kw + kx] = acc;
        }
      }
    }
  }
  return gw;
}

}  // namespace

// --- elementwise ----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  return make_result("add", a.shape(), map_binary(a, b, std::plus<>()), {a, b},
                     [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  return make_result("sub", a.shape(), map_binary(a, b, std::minus<>()), {a, b},
                     [](const Tensor& g) { return std::vector<Tensor>{g, neg(g)}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  return make_result("mul", a.shape(), map_binary(a, b, std::multiplies<>()), {a, b},
                     [a, b](const Tensor& g) { return std::vector<Tensor>{mul(g, b), mul(g, a)}; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape("div", a, b);
  return make_result("div", a.shape(), map_binary(a, b, std::divides<>()), {a, b},
                     [a, b](const Tensor& g) {
                       return std::vector<Tensor>{div(g, b), neg(div(mul(g, a), mul(b, b)))};
                     });
}

Tensor neg(const Tensor& a) {
  return make_result("neg", a.shape(), map_unary(a, std::negate<>()), {a},
                     [](const Tensor& g) { return std::vector<Tensor>{neg(g)}; });
}

Tensor scale(const Tensor& a, double s) {
  return make_result("scale", a.shape(), map_unary(a, [s](double v) { return v * s; }), {a},
                     [s](const Tensor& g) { return std::vector<Tensor>{scale(g, s)}; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return make_result("add_scalar", a.shape(), map_unary(a, [s](double v) { return v + s; }), {a},
                     [](const Tensor& g) { return std::vector<Tensor>{g}; });
}

Tensor square(const Tensor& a) { return mul(a, a); }

Tensor sqrt(const Tensor& a) {
  return make_result("sqrt", a.shape(), map_unary(a, [](double v) { return std::sqrt(v); }), {a},
                     [a](const Tensor& g) {
                       return std::vector<Tensor>{div(g, scale(tempgen::sqrt(a), 2.0))};
                     });
}

Tensor tanh(const Tensor& a) {
  return make_result("tanh", a.shape(), map_unary(a, [](double v) { return std::tanh(v); }), {a},
                     [a](const Tensor& g) {
                       const Tensor t = tempgen::tanh(a);
                       return std::vector<Tensor>{mul(g, add_scalar(neg(mul(t, t)), 1.0))};
                     });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  std::vector<double> mask = map_unary(a, [slope](double v) { return v >= 0.0 ? 1.0 : slope; });
  std::vector<double> out = map_binary(a, Tensor::from(a.shape(), mask), std::multiplies<>());
  const Tensor m = Tensor::from(a.shape(), std::move(mask));
  return make_result("leaky_relu", a.shape(), std::move(out), {a},
                     [m](const Tensor& g) { return std::vector<Tensor>{mul(g, m)}; });
}

Tensor relu(const Tensor& a) { return leaky_relu(a, 0.0); }

// --- linear algebra ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = transpose_a ? a.dim(1) : a.dim(0);
  const std::size_t k = transpose_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = transpose_b ? b.dim(1) : b.dim(0);
  const std::size_t n = transpose_b ? b.dim(0) : b.dim(1);
  if (k != kb) {
    throw ShapeError("matmul: inner dimensions differ, " + to_string(a.shape()) +
                     (transpose_a ? "^T" : "") + " x " + to_string(b.shape()) + (transpose_b ? "^T" : ""));
  }
  // Row-major copies of op(a) and op(b).
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> at, bt;
  const double* A = ad.data();
  const double* B = bd.data();
  if (transpose_a) {
    at.resize(m * k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < m; ++j) at[j * k + i] = ad[i * m + j];
    A = at.data();
  }
  if (transpose_b) {
    bt.resize(k * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) bt[j * n + i] = bd[i * k + j];
    B = bt.data();
  }
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = &c[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(c), {a, b},
                     [a, b, transpose_a, transpose_b](const Tensor& g) {
                       Tensor ga = transpose_a ? matmul(b, g, transpose_b, true)
                                               : matmul(g, b, false, !transpose_b);
                       Tensor gb = transpose_b ? matmul(g, a, true, transpose_a)
                                               : matmul(a, g, !transpose_a, false);
                       return std::vector<Tensor>{ga, gb};
                     });
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank("dense", x, 2);
  require_rank("dense", weight, 2);
  if (x.dim(1) != weight.dim(1)) {
    throw ShapeError("dense: input " + to_string(x.shape()) + " does not match weight " +
                     to_string(weight.shape()));
  }
  return add_channel(matmul(x, weight, false, true), bias);
}

// --- convolution --------------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Tensor& w, const Conv2dGeometry& geom) {
  const ConvDims d = conv_dims(x.shape(), w.shape(), geom, "conv2d");
  return make_result("conv2d", {d.n, d.o, d.oh, d.ow}, conv_forward(x.data(), w.data(), d, geom), {x, w},
                     [x, w, geom](const Tensor& g) {
                       return std::vector<Tensor>{conv2d_input_grad(g, w, geom, x.shape()),
                                                  conv2d_weight_grad(x, g, geom, w.shape())};
                     });
}

Tensor conv2d_input_grad(const Tensor& g, const Tensor& w, const Conv2dGeometry& geom,
                         const Shape& input_shape) {
  const ConvDims d = conv_dims(input_shape, w.shape(), geom, "conv2d_input_grad");
  const Shape expected{d.n, d.o, d.oh, d.ow};
  if (g.shape() != expected) {
    throw ShapeError("conv2d_input_grad: gradient " + to_string(g.shape()) + " does not match " +
                     to_string(expected));
  }
  return make_result("conv2d_input_grad", input_shape, conv_backward_input(g.data(), w.data(), d, geom),
                     {g, w}, [g, w, geom](const Tensor& dz) {
                       return std::vector<Tensor>{conv2d(dz, w, geom),
                                                  conv2d_weight_grad(dz, g, geom, w.shape())};
                     });
}

Tensor conv2d_weight_grad(const Tensor& x, const Tensor& g, const Conv2dGeometry& geom,
                          const Shape& weight_shape) {
  const ConvDims d = conv_dims(x.shape(), weight_shape, geom, "conv2d_weight_grad");
  const Shape expected{d.n, d.o, d.oh, d.ow};
  if (g.shape() != expected) {
    throw ShapeError("conv2d_weight_grad: gradient " + to_string(g.shape()) + " does not match " +
                     to_string(expected));
  }
  return make_result("conv2d_weight_grad", weight_shape, conv_backward_weight(x.data(), g.data(), d, geom),
                     {x, g}, [x, g, geom](const Tensor& dz) {
                       return std::vector<Tensor>{conv2d_input_grad(g, dz, geom, x.shape()),
                                                  conv2d(x, dz, geom)};
                     });
}

Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride) {
  require_rank("conv1d", x, 3);
  require_rank("conv1d", w, 3);
  const Conv2dGeometry geom{1, stride, 0, 0};
  const Tensor y = conv2d(reshape(x, {x.dim(0), x.dim(1), 1, x.dim(2)}),
                          reshape(w, {w.dim(0), w.dim(1), 1, w.dim(2)}), geom);
  return reshape(y, {y.dim(0), y.dim(1), y.dim(3)});
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& w) {
  require_rank("conv_transpose1d", x, 3);
  require_rank("conv_transpose1d", w, 3);
  if (x.dim(1) != w.dim(0)) {
    throw ShapeError("conv_transpose1d: input " + to_string(x.shape()) + " does not match weight " +
                     to_string(w.shape()));
  }
  const std::size_t out_len = x.dim(2) + w.dim(2) - 1;
  const Tensor y = conv2d_input_grad(reshape(x, {x.dim(0), x.dim(1), 1, x.dim(2)}),
                                     reshape(w, {w.dim(0), w.dim(1), 1, w.dim(2)}), {},
                                     {x.dim(0), w.dim(1), 1, out_len});
  return reshape(y, {x.dim(0), w.dim(1), out_len});
}

// --- broadcasting and reductions ------------------------------------------------------

Tensor broadcast_channel(const Tensor& b, const Shape& shape) {
  require_rank("broadcast_channel", b, 1);
  if (shape.size() < 2 || shape[1] != b.dim(0)) {
    throw ShapeError("broadcast_channel: " + to_string(b.shape()) + " cannot broadcast to " +
                     to_string(shape));
  }
  const AxisSplit s = split_at(shape, 1);
  const auto src = b.data();
  std::vector<double> out(numel(shape));
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t c = 0; c < s.extent; ++c)
      std::fill_n(out.begin() + (o * s.extent + c) * s.inner, s.inner, src[c]);
  return make_result("broadcast_channel", shape, std::move(out), {b},
                     [](const Tensor& g) { return std::vector<Tensor>{channel_sum(g)}; });
}

Tensor channel_sum(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("channel_sum: expected rank >= 2, got " + to_string(x.shape()));
  const AxisSplit s = split_at(x.shape(), 1);
  const auto src = x.data();
  std::vector<double> out(s.extent, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t c = 0; c < s.extent; ++c) {
      const double* p = &src[(o * s.extent + c) * s.inner];
      double acc = 0.0;
      for (std::size_t i = 0; i < s.inner; ++i) acc += p[i];
      out[c] += acc;
    }
  return make_result("channel_sum", {s.extent}, std::move(out), {x}, [shape = x.shape()](const Tensor& g) {
    return std::vector<Tensor>{broadcast_channel(g, shape)};
  });
}

Tensor add_channel(const Tensor& x, const Tensor& b) { return add(x, broadcast_channel(b, x.shape())); }

Tensor broadcast_rows(const Tensor& r, const Shape& shape) {
  require_rank("broadcast_rows", r, 1);
  if (shape.empty() || shape[0] != r.dim(0)) {
    throw ShapeError("broadcast_rows: " + to_string(r.shape()) + " cannot broadcast to " +
                     to_string(shape));
  }
  const std::size_t inner = numel(shape) / shape[0];
  const auto src = r.data();
  std::vector<double> out(numel(shape));
  for (std::size_t n = 0; n < shape[0]; ++n) std::fill_n(out.begin() + n * inner, inner, src[n]);
  return make_result("broadcast_rows", shape, std::move(out), {r},
                     [](const Tensor& g) { return std::vector<Tensor>{row_sum(g)}; });
}

Tensor row_sum(const Tensor& x) {
  if (x.rank() < 1) throw ShapeError("row_sum: rank-0 input");
  const std::size_t rows = x.dim(0);
  const std::size_t inner = rows ? x.numel() / rows : 0;
  const auto src = x.data();
  std::vector<double> out(rows, 0.0);
  for (std::size_t n = 0; n < rows; ++n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < inner; ++i) acc += src[n * inner + i];
    out[n] = acc;
  }
  return make_result("row_sum", {rows}, std::move(out), {x}, [shape = x.shape()](const Tensor& g) {
    return std::vector<Tensor>{broadcast_rows(g, shape)};
  });
}

Tensor row_norm(const Tensor& x) {
  if (x.rank() < 1) throw ShapeError("row_norm: rank-0 input");
  const std::size_t rows = x.dim(0);
  const std::size_t inner = rows ? x.numel() / rows : 0;
  const auto src = x.data();
  std::vector<double> out(rows, 0.0);
  for (std::size_t n = 0; n < rows; ++n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < inner; ++i) acc += src[n * inner + i] * src[n * inner + i];
    out[n] = std::sqrt(acc);
  }
  // d||x||/dx = x / ||x||; an all-zero row takes the zero subgradient.
  std::vector<double> zero_rows(rows);
  for (std::size_t n = 0; n < rows; ++n) zero_rows[n] = out[n] == 0.0 ? 1.0 : 0.0;
  const Tensor guard = Tensor::from({rows}, std::move(zero_rows));
  return make_result("row_norm", {rows}, std::move(out), {x}, [x, guard](const Tensor& g) {
    const Tensor safe = add(row_norm(x), guard);
    return std::vector<Tensor>{mul(broadcast_rows(div(g, safe), x.shape()), x)};
  });
}

Tensor sum(const Tensor& x) {
  const auto src = x.data();
  double acc = 0.0;
  for (double v : src) acc += v;
  return make_result("sum", {}, {acc}, {x}, [shape = x.shape()](const Tensor& g) {
    return std::vector<Tensor>{expand(g, shape)};
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor l2_norm(const Tensor& x) { return tempgen::sqrt(sum(square(x))); }

Tensor expand(const Tensor& s, const Shape& shape) {
  if (s.numel() != 1) throw ShapeError("expand: source must hold one element, got " + to_string(s.shape()));
  return make_result("expand", shape, std::vector<double>(numel(shape), s.data()[0]), {s},
                     [shape0 = s.shape()](const Tensor& g) {
                       return std::vector<Tensor>{reshape(sum(g), shape0)};
                     });
}

// --- shape manipulation -----------------------------------------------------------------

Tensor reshape(const Tensor& x, const Shape& shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  const auto src = x.data();
  return make_result("reshape", shape, std::vector<double>(src.begin(), src.end()), {x},
                     [old = x.shape()](const Tensor& g) { return std::vector<Tensor>{reshape(g, old)}; });
}

Tensor flatten(const Tensor& x) {
  if (x.rank() < 1) throw ShapeError("flatten: rank-0 input");
  return reshape(x, {x.dim(0), x.dim(0) ? x.numel() / x.dim(0) : 0});
}

Tensor unsqueeze(const Tensor& x, std::size_t axis) {
  Shape s = x.shape();
  if (axis > s.size()) throw ShapeError("unsqueeze: axis out of range for " + to_string(s));
  s.insert(s.begin() + static_cast<std::ptrdiff_t>(axis), 1);
  return reshape(x, s);
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Shape shape = parts.front().shape();
  if (axis >= shape.size()) throw ShapeError("concat: axis out of range for " + to_string(shape));
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    bool ok = ps.size() == shape.size();
    for (std::size_t i = 0; ok && i < ps.size(); ++i) ok = (i == axis) || ps[i] == shape[i];
    if (!ok) {
      throw ShapeError("concat: incompatible shapes " + to_string(parts.front().shape()) + " and " +
                       to_string(ps));
    }
    total += ps[axis];
  }
  shape[axis] = total;
  const AxisSplit out_split = split_at(shape, axis);
  std::vector<double> out(numel(shape));
  std::size_t offset = 0;
  std::vector<std::size_t> extents;
  for (const auto& p : parts) {
    const AxisSplit ps = split_at(p.shape(), axis);
    const auto src = p.data();
    const std::size_t block = ps.extent * ps.inner;
    for (std::size_t o = 0; o < ps.outer; ++o) {
      std::copy_n(src.begin() + o * block, block,
                  out.begin() + o * out_split.extent * out_split.inner + offset * ps.inner);
    }
    offset += ps.extent;
    extents.push_back(ps.extent);
  }
  return make_result("concat", shape, std::move(out), parts, [axis, extents](const Tensor& g) {
    std::vector<Tensor> grads;
    std::size_t start = 0;
    for (std::size_t e : extents) {
      grads.push_back(slice(g, axis, start, e));
      start += e;
    }
    return grads;
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& in = x.shape();
  if (axis >= in.size() || start + length > in[axis]) {
    throw ShapeError("slice: [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") out of range on axis " + std::to_string(axis) + " of " + to_string(in));
  }
  Shape shape = in;
  shape[axis] = length;
  const AxisSplit s = split_at(in, axis);
  const auto src = x.data();
  std::vector<double> out(numel(shape));
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(src.begin() + (o * s.extent + start) * s.inner, length * s.inner,
                out.begin() + o * length * s.inner);
  }
  return make_result("slice", shape, std::move(out), {x}, [in, axis, start, length](const Tensor& g) {
    std::vector<Tensor> parts;
    if (start > 0) {
      Shape before = in;
      before[axis] = start;
      parts.push_back(Tensor::zeros(before));
    }
    parts.push_back(g);
    if (start + length < in[axis]) {
      Shape after = in;
      after[axis] = in[axis] - start - length;
      parts.push_back(Tensor::zeros(after));
    }
    return std::vector<Tensor>{parts.size() == 1 ? g : concat(parts, axis)};
  });
}

// --- batch normalisation -------------------------------------------------------------

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  bool training) {
  if (x.rank() < 2) throw ShapeError("batch_norm: expected (N, C, ...), got " + to_string(x.shape()));
  const std::size_t channels = x.dim(1);
  if (gamma.shape() != Shape{channels} || beta.shape() != Shape{channels}) {
    throw ShapeError("batch_norm: affine parameters " + to_string(gamma.shape()) + " do not match " +
                     to_string(x.shape()));
  }
  const Shape& shape = x.shape();
  Tensor centred, inv_std;
  if (training) {
    const std::size_t count = x.numel() / channels;
    if (count < 2) throw ShapeError("batch_norm: training mode needs more than one value per channel");
    const double inv_count = 1.0 / static_cast<double>(count);
    const Tensor mu = scale(channel_sum(x), inv_count);
    centred = sub(x, broadcast_channel(mu, shape));
    const Tensor var = scale(channel_sum(square(centred)), inv_count);
    inv_std = div(Tensor::full({channels}, 1.0), tempgen::sqrt(add_scalar(var, state.eps)));

    auto rm = state.running_mean.mutable_data();
    auto rv = state.running_var.mutable_data();
    const double unbias = static_cast<double>(count) / static_cast<double>(count - 1);
    for (std::size_t c = 0; c < channels; ++c) {
      rm[c] = (1.0 - state.momentum) * rm[c] + state.momentum * mu[c];
      rv[c] = (1.0 - state.momentum) * rv[c] + state.momentum * var[c] * unbias;
    }
  } else {
    centred = sub(x, broadcast_channel(state.running_mean.detach(), shape));
    std::vector<double> inv(channels);
    const auto rv = state.running_var.data();
    for (std::size_t c = 0; c < channels; ++c) inv[c] = 1.0 / std::sqrt(rv[c] + state.eps);
    inv_std = Tensor::from({channels}, std::move(inv));
  }
  const Tensor normalised = mul(centred, broadcast_channel(inv_std, shape));
  return add(mul(normalised, broadcast_channel(gamma, shape)), broadcast_channel(beta, shape));
}

}  // namespace tempgen
