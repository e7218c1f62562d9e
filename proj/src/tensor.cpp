// Copyright 2026 The vssm-jscc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vjscc/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vjscc/kernels.hpp"

namespace vjscc {

namespace {

[[noreturn]] void dim_error(const std::string& msg) {
  throw std::invalid_argument(msg);
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) {
    dim_error(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
              " vs " + shape_str(b.shape));
  }
}

TensorPtr make_like(const Shape& shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = shape;
  t->data.assign(shape_numel(shape), 0.0);
  t->requires_grad = requires_grad;
  return t;
}

const kernels::Ops& K() { return kernels::active(); }

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d <= 0) dim_error("non-positive dimension in shape " + shape_str(s));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

TensorPtr tensor(Shape shape, std::vector<Real> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    dim_error("tensor: shape " + shape_str(shape) + " expects " +
              std::to_string(shape_numel(shape)) + " values, got " +
              std::to_string(data.size()));
  }
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data = std::move(data);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr zeros(Shape shape, bool requires_grad) {
  return make_like(shape, requires_grad);
}

TensorPtr full(Shape shape, Real value, bool requires_grad) {
  auto t = make_like(shape, requires_grad);
  t->data.assign(t->numel(), value);
  return t;
}

TensorPtr scalar_tensor(Real value) { return tensor({1}, {value}); }

TensorPtr randn(Shape shape, Rng& rng, Real stddev, bool requires_grad) {
  auto t = make_like(shape, requires_grad);
  for (auto& v : t->data) v = rng.normal(0.0, stddev);
  return t;
}

// --- Tape ------------------------------------------------------------------

void Tape::record(std::vector<TensorPtr> inputs, TensorPtr output,
                  BackwardFn fn) {
  entries_.push_back({std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::backward(const TensorPtr& loss) {
  if (consumed_) {
    throw std::logic_error("Tape::backward called twice without reset()");
  }
  if (entries_.empty()) {
    throw std::logic_error("Tape::backward on an empty tape");
  }
  if (!loss || loss->numel() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be a scalar");
  }
  consumed_ = true;
  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->output->ensure_grad();
    for (auto& in : it->inputs) {
      if (in->requires_grad) in->ensure_grad();
    }
    it->fn();
  }
}

void Tape::reset() {
  entries_.clear();
  consumed_ = false;
}

// --- Elementwise -----------------------------------------------------------

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  check_same_shape("add", *a, *b);
  auto out = make_like(a->shape, a->requires_grad || b->requires_grad);
  K().add(a->data.data(), b->data.data(), out->data.data(), out->numel());
  if (tape && out->requires_grad) {
    tape->record({a, b}, out, [a, b, out] {
      std::size_t n = out->numel();
      if (a->requires_grad) K().axpy(1.0, out->grad.data(), a->grad.data(), n);
      if (b->requires_grad) K().axpy(1.0, out->grad.data(), b->grad.data(), n);
    });
  }
  return out;
}

TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  check_same_shape("mul", *a, *b);
  auto out = make_like(a->shape, a->requires_grad || b->requires_grad);
  K().mul(a->data.data(), b->data.data(), out->data.data(), out->numel());
  if (tape && out->requires_grad) {
    tape->record({a, b}, out, [a, b, out] {
      std::size_t n = out->numel();
      if (a->requires_grad) {
        for (std::size_t i = 0; i < n; ++i)
          a->grad[i] += out->grad[i] * b->data[i];
      }
      if (b->requires_grad) {
        for (std::size_t i = 0; i < n; ++i)
          b->grad[i] += out->grad[i] * a->data[i];
      }
    });
  }
  return out;
}

TensorPtr add_scalar(Tape* tape, const TensorPtr& a, Real s) {
  auto out = make_like(a->shape, a->requires_grad);
  for (std::size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] + s;
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out] {
      K().axpy(1.0, out->grad.data(), a->grad.data(), out->numel());
    });
  }
  return out;
}

TensorPtr mul_scalar(Tape* tape, const TensorPtr& a, Real s) {
  auto out = make_like(a->shape, a->requires_grad);
  K().scale(a->data.data(), s, out->data.data(), out->numel());
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out, s] {
      K().axpy(s, out->grad.data(), a->grad.data(), out->numel());
    });
  }
  return out;
}

TensorPtr exp(Tape* tape, const TensorPtr& a) {
  auto out = make_like(a->shape, a->requires_grad);
  for (std::size_t i = 0; i < out->numel(); ++i)
    out->data[i] = std::exp(a->data[i]);
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out] {
      for (std::size_t i = 0; i < out->numel(); ++i)
        a->grad[i] += out->grad[i] * out->data[i];
    });
  }
  return out;
}

TensorPtr reciprocal(Tape* tape, const TensorPtr& a) {
  auto out = make_like(a->shape, a->requires_grad);
  for (std::size_t i = 0; i < out->numel(); ++i)
    out->data[i] = 1.0 / a->data[i];
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out] {
      for (std::size_t i = 0; i < out->numel(); ++i)
        a->grad[i] -= out->grad[i] * out->data[i] * out->data[i];
    });
  }
  return out;
}

TensorPtr clamp_max(Tape* tape, const TensorPtr& a, Real cap) {
  auto out = make_like(a->shape, a->requires_grad);
  for (std::size_t i = 0; i < out->numel(); ++i)
    out->data[i] = a->data[i] < cap ? a->data[i] : cap;
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out, cap] {
      for (std::size_t i = 0; i < out->numel(); ++i) {
        if (a->data[i] < cap) a->grad[i] += out->grad[i];
      }
    });
  }
  return out;
}

TensorPtr silu(Tape* tape, const TensorPtr& a) {
  auto out = make_like(a->shape, a->requires_grad);
  auto sig = std::make_shared<std::vector<Real>>(out->numel());
  for (std::size_t i = 0; i < out->numel(); ++i) {
    Real s = 1.0 / (1.0 + std::exp(-a->data[i]));
    (*sig)[i] = s;
    out->data[i] = a->data[i] * s;
  }
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out, sig] {
      for (std::size_t i = 0; i < out->numel(); ++i) {
        Real s = (*sig)[i];
        a->grad[i] += out->grad[i] * s * (1.0 + a->data[i] * (1.0 - s));
      }
    });
  }
  return out;
}

// --- Rearrangement ---------------------------------------------------------

TensorPtr reverse(Tape* tape, const TensorPtr& a) {
  auto out = make_like(a->shape, a->requires_grad);
  std::size_t n = out->numel();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = a->data[n - 1 - i];
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out, n] {
      for (std::size_t i = 0; i < n; ++i)
        a->grad[n - 1 - i] += out->grad[i];
    });
  }
  return out;
}

TensorPtr transpose2d(Tape* tape, const TensorPtr& a) {
  if (a->rank() != 2) {
    dim_error("transpose2d: expected rank-2 tensor, got " +
              shape_str(a->shape));
  }
  int m = a->dim(0), n = a->dim(1);
  auto out = make_like({n, m}, a->requires_grad);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out->data[j * m + i] = a->data[i * n + j];
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out, m, n] {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          a->grad[i * n + j] += out->grad[j * m + i];
    });
  }
  return out;
}

TensorPtr reshape(Tape* tape, const TensorPtr& a, Shape new_shape) {
  if (shape_numel(new_shape) != a->numel()) {
    dim_error("reshape: " + shape_str(a->shape) + " -> " +
              shape_str(new_shape) + " changes element count");
  }
  auto out = make_like(new_shape, a->requires_grad);
  out->data = a->data;
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out] {
      K().axpy(1.0, out->grad.data(), a->grad.data(), out->numel());
    });
  }
  return out;
}

TensorPtr sum(Tape* tape, const TensorPtr& a) {
  auto out = make_like({1}, a->requires_grad);
  out->data[0] = K().sum(a->data.data(), a->numel());
  if (tape && out->requires_grad) {
    tape->record({a}, out, [a, out] {
      Real g = out->grad[0];
      for (std::size_t i = 0; i < a->numel(); ++i) a->grad[i] += g;
    });
  }
  return out;
}

// --- Matmul ----------------------------------------------------------------

TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->rank() != 2 || b->rank() != 2 || a->dim(1) != b->dim(0)) {
    dim_error("matmul: incompatible shapes " + shape_str(a->shape) + " x " +
              shape_str(b->shape));
  }
  int m = a->dim(0), k = a->dim(1), n = b->dim(1);
  auto out = make_like({m, n}, a->requires_grad || b->requires_grad);
  for (int i = 0; i < m; ++i) {
    Real* out_row = out->data.data() + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      K().axpy(a->data[static_cast<std::size_t>(i) * k + kk],
               b->data.data() + static_cast<std::size_t>(kk) * n, out_row,
               static_cast<std::size_t>(n));
    }
  }
  if (tape && out->requires_grad) {
    tape->record({a, b}, out, [a, b, out, m, k, n] {
      if (a->requires_grad) {
        // dA = dY * B^T
        for (int i = 0; i < m; ++i) {
          const Real* gy_row = out->grad.data() + static_cast<std::size_t>(i) * n;
          for (int kk = 0; kk < k; ++kk) {
            a->grad[static_cast<std::size_t>(i) * k + kk] +=
                K().dot(gy_row, b->data.data() + static_cast<std::size_t>(kk) * n,
                        static_cast<std::size_t>(n));
          }
        }
      }
      if (b->requires_grad) {
        // dB = A^T * dY
        for (int i = 0; i < m; ++i) {
          const Real* gy_row = out->grad.data() + static_cast<std::size_t>(i) * n;
          for (int kk = 0; kk < k; ++kk) {
            K().axpy(a->data[static_cast<std::size_t>(i) * k + kk], gy_row,
                     b->grad.data() + static_cast<std::size_t>(kk) * n,
                     static_cast<std::size_t>(n));
          }
        }
      }
    });
  }
  return out;
}

// --- Layer norm -------------------------------------------------------------

TensorPtr layer_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                     const TensorPtr& beta, Real eps) {
  if (x->rank() < 1) dim_error("layer_norm: rank-0 input");
  int d = x->dim(x->rank() - 1);
  if (gamma->shape != Shape{d} || beta->shape != Shape{d}) {
    dim_error("layer_norm: affine shapes " + shape_str(gamma->shape) + "/" +
              shape_str(beta->shape) + " do not match last axis " +
              std::to_string(d));
  }
  std::size_t rows = x->numel() / static_cast<std::size_t>(d);
  bool rg = x->requires_grad || gamma->requires_grad || beta->requires_grad;
  auto out = make_like(x->shape, rg);
  auto xhat = std::make_shared<std::vector<Real>>(x->numel());
  auto rstd = std::make_shared<std::vector<Real>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = x->data.data() + r * d;
    Real mu = K().sum(row, d) / d;
    Real var = 0.0;
    for (int j = 0; j < d; ++j) {
      Real c = row[j] - mu;
      var += c * c;
    }
    var /= d;
    Real rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    Real* xh = xhat->data() + r * d;
    Real* o = out->data.data() + r * d;
    for (int j = 0; j < d; ++j) {
      xh[j] = (row[j] - mu) * rs;
      o[j] = xh[j] * gamma->data[j] + beta->data[j];
    }
  }
  if (tape && rg) {
    tape->record({x, gamma, beta}, out, [x, gamma, beta, out, xhat, rstd, d,
                                         rows] {
      std::vector<Real> dxhat(static_cast<std::size_t>(d));
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* gy = out->grad.data() + r * d;
        const Real* xh = xhat->data() + r * d;
        for (int j = 0; j < d; ++j) dxhat[j] = gy[j] * gamma->data[j];
        if (gamma->requires_grad) {
          for (int j = 0; j < d; ++j) gamma->grad[j] += gy[j] * xh[j];
        }
        if (beta->requires_grad) {
          for (int j = 0; j < d; ++j) beta->grad[j] += gy[j];
        }
        if (x->requires_grad) {
          Real m1 = 0.0, m2 = 0.0;
          for (int j = 0; j < d; ++j) {
            m1 += dxhat[j];
            m2 += dxhat[j] * xh[j];
          }
          m1 /= d;
          m2 /= d;
          Real rs = (*rstd)[r];
          Real* gx = x->grad.data() + r * d;
          for (int j = 0; j < d; ++j)
            gx[j] += rs * (dxhat[j] - m1 - xh[j] * m2);
        }
      }
    });
  }
  return out;
}

// --- Convolutions -----------------------------------------------------------

namespace {

struct ConvDims {
  int cin, h, w, cout, k, hout, wout;
};

ConvDims conv_dims(const char* op, const Tensor& x, int cout, int k,
                   int stride, int padding) {
  if (x.rank() != 3) {
    dim_error(std::string(op) + ": input must be [C,H,W], got " +
              shape_str(x.shape));
  }
  if (k < 1 || stride < 1) {
    dim_error(std::string(op) + ": kernel and stride must be >= 1");
  }
  ConvDims d;
  d.cin = x.dim(0);
  d.h = x.dim(1);
  d.w = x.dim(2);
  d.cout = cout;
  d.k = k;
  d.hout = (d.h + 2 * padding - k) / stride + 1;
  d.wout = (d.w + 2 * padding - k) / stride + 1;
  if (d.h + 2 * padding - k < 0 || d.w + 2 * padding - k < 0 || d.hout < 1 ||
      d.wout < 1) {
    dim_error(std::string(op) + ": non-positive output size for input " +
              shape_str(x.shape) + ", k=" + std::to_string(k) +
              ", stride=" + std::to_string(stride) +
              ", padding=" + std::to_string(padding));
  }
  return d;
}

// Accumulates one (ci,ki,kj) kernel tap into all output positions it feeds.
// For stride 1 the inner x-loop is a contiguous axpy.
void conv_tap_forward(Real wv, const Real* xplane, Real* oplane, int h, int w,
                      int hout, int wout, int ki, int kj, int stride,
                      int padding) {
  for (int oy = 0; oy < hout; ++oy) {
    int iy = oy * stride + ki - padding;
    if (iy < 0 || iy >= h) continue;
    if (stride == 1) {
      int ox0 = std::max(0, padding - kj);
      int ox1 = std::min(wout - 1, w - 1 + padding - kj);
      if (ox0 > ox1) continue;
      K().axpy(wv, xplane + static_cast<std::size_t>(iy) * w + (ox0 + kj - padding),
               oplane + static_cast<std::size_t>(oy) * wout + ox0,
               static_cast<std::size_t>(ox1 - ox0 + 1));
    } else {
      for (int ox = 0; ox < wout; ++ox) {
        int ix = ox * stride + kj - padding;
        if (ix < 0 || ix >= w) continue;
        oplane[static_cast<std::size_t>(oy) * wout + ox] +=
            wv * xplane[static_cast<std::size_t>(iy) * w + ix];
      }
    }
  }
}

// dx accumulation for one tap: transpose of conv_tap_forward.
void conv_tap_backward_x(Real wv, Real* gxplane, const Real* gyplane, int h,
                         int w, int hout, int wout, int ki, int kj, int stride,
                         int padding) {
  for (int oy = 0; oy < hout; ++oy) {
    int iy = oy * stride + ki - padding;
    if (iy < 0 || iy >= h) continue;
    if (stride == 1) {
      int ox0 = std::max(0, padding - kj);
      int ox1 = std::min(wout - 1, w - 1 + padding - kj);
      if (ox0 > ox1) continue;
      K().axpy(wv, gyplane + static_cast<std::size_t>(oy) * wout + ox0,
               gxplane + static_cast<std::size_t>(iy) * w + (ox0 + kj - padding),
               static_cast<std::size_t>(ox1 - ox0 + 1));
    } else {
      for (int ox = 0; ox < wout; ++ox) {
        int ix = ox * stride + kj - padding;
        if (ix < 0 || ix >= w) continue;
        gxplane[static_cast<std::size_t>(iy) * w + ix] +=
            wv * gyplane[static_cast<std::size_t>(oy) * wout + ox];
      }
    }
  }
}

// dw for one tap: correlation of gy with the input window.
Real conv_tap_backward_w(const Real* xplane, const Real* gyplane, int h, int w,
                         int hout, int wout, int ki, int kj, int stride,
                         int padding) {
  Real acc = 0.0;
  for (int oy = 0; oy < hout; ++oy) {
    int iy = oy * stride + ki - padding;
    if (iy < 0 || iy >= h) continue;
    if (stride == 1) {
      int ox0 = std::max(0, padding - kj);
      int ox1 = std::min(wout - 1, w - 1 + padding - kj);
      if (ox0 > ox1) continue;
      acc += K().dot(gyplane + static_cast<std::size_t>(oy) * wout + ox0,
                     xplane + static_cast<std::size_t>(iy) * w + (ox0 + kj - padding),
                     static_cast<std::size_t>(ox1 - ox0 + 1));
    } else {
      for (int ox = 0; ox < wout; ++ox) {
        int ix = ox * stride + kj - padding;
        if (ix < 0 || ix >= w) continue;
        acc += gyplane[static_cast<std::size_t>(oy) * wout + ox] *
               xplane[static_cast<std::size_t>(iy) * w + ix];
      }
    }
  }
  return acc;
}

}  // namespace

TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& bias, int stride, int padding) {
  if (w->rank() != 4) {
    dim_error("conv2d: weight must be [Cout,Cin,k,k], got " +
              shape_str(w->shape));
  }
  if (w->dim(2) != w->dim(3)) {
    dim_error("conv2d: non-square kernel " + shape_str(w->shape));
  }
  ConvDims d = conv_dims("conv2d", *x, w->dim(0), w->dim(2), stride, padding);
  if (w->dim(1) != d.cin) {
    dim_error("conv2d: weight " + shape_str(w->shape) +
              " does not match input channels " + shape_str(x->shape));
  }
  if (bias && bias->shape != Shape{d.cout}) {
    dim_error("conv2d: bias " + shape_str(bias->shape) + " must be [" +
              std::to_string(d.cout) + "]");
  }
  bool rg = x->requires_grad || w->requires_grad ||
            (bias && bias->requires_grad);
  auto out = make_like({d.cout, d.hout, d.wout}, rg);
  std::size_t xplane = static_cast<std::size_t>(d.h) * d.w;
  std::size_t oplane = static_cast<std::size_t>(d.hout) * d.wout;
  std::size_t wplane = static_cast<std::size_t>(d.k) * d.k;
  for (int co = 0; co < d.cout; ++co) {
    Real* o = out->data.data() + co * oplane;
    for (int ci = 0; ci < d.cin; ++ci) {
      const Real* xp = x->data.data() + ci * xplane;
      const Real* wt = w->data.data() + (static_cast<std::size_t>(co) * d.cin + ci) * wplane;
      for (int ki = 0; ki < d.k; ++ki)
        for (int kj = 0; kj < d.k; ++kj)
          conv_tap_forward(wt[ki * d.k + kj], xp, o, d.h, d.w, d.hout, d.wout,
                           ki, kj, stride, padding);
    }
    if (bias) {
      for (std::size_t i = 0; i < oplane; ++i) o[i] += bias->data[co];
    }
  }
  if (tape && rg) {
    std::vector<TensorPtr> ins = {x, w};
    if (bias) ins.push_back(bias);
    tape->record(ins, out, [x, w, bias, out, d, stride, padding, xplane,
                            oplane, wplane] {
      for (int co = 0; co < d.cout; ++co) {
        const Real* gy = out->grad.data() + co * oplane;
        for (int ci = 0; ci < d.cin; ++ci) {
          std::size_t widx = (static_cast<std::size_t>(co) * d.cin + ci) * wplane;
          for (int ki = 0; ki < d.k; ++ki) {
            for (int kj = 0; kj < d.k; ++kj) {
              if (x->requires_grad) {
                conv_tap_backward_x(w->data[widx + ki * d.k + kj],
                                    x->grad.data() + ci * xplane, gy, d.h, d.w,
                                    d.hout, d.wout, ki, kj, stride, padding);
              }
              if (w->requires_grad) {
                w->grad[widx + ki * d.k + kj] += conv_tap_backward_w(
                    x->data.data() + ci * xplane, gy, d.h, d.w, d.hout, d.wout,
                    ki, kj, stride, padding);
              }
            }
          }
        }
        if (bias && bias->requires_grad) {
          bias->grad[co] += K().sum(gy, oplane);
        }
      }
    });
  }
  return out;
}

TensorPtr depthwise_conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                           const TensorPtr& bias, int stride, int padding) {
  if (w->rank() != 3 || w->dim(1) != w->dim(2)) {
    dim_error("depthwise_conv2d: weight must be [C,k,k], got " +
              shape_str(w->shape));
  }
  ConvDims d =
      conv_dims("depthwise_conv2d", *x, x->dim(0), w->dim(1), stride, padding);
  if (w->dim(0) != d.cin) {
    dim_error("depthwise_conv2d: weight " + shape_str(w->shape) +
              " does not match input channels " + shape_str(x->shape));
  }
  if (bias && bias->shape != Shape{d.cin}) {
    dim_error("depthwise_conv2d: bias " + shape_str(bias->shape) +
              " must be [" + std::to_string(d.cin) + "]");
  }
  bool rg = x->requires_grad || w->requires_grad ||
            (bias && bias->requires_grad);
  auto out = make_like({d.cin, d.hout, d.wout}, rg);
  std::size_t xplane = static_cast<std::size_t>(d.h) * d.w;
  std::size_t oplane = static_cast<std::size_t>(d.hout) * d.wout;
  std::size_t wplane = static_cast<std::size_t>(d.k) * d.k;
  for (int c = 0; c < d.cin; ++c) {
    Real* o = out->data.data() + c * oplane;
    const Real* xp = x->data.data() + c * xplane;
    const Real* wt = w->data.data() + c * wplane;
    for (int ki = 0; ki < d.k; ++ki)
      for (int kj = 0; kj < d.k; ++kj)
        conv_tap_forward(wt[ki * d.k + kj], xp, o, d.h, d.w, d.hout, d.wout,
                         ki, kj, stride, padding);
    if (bias) {
      for (std::size_t i = 0; i < oplane; ++i) o[i] += bias->data[c];
    }
  }
  if (tape && rg) {
    std::vector<TensorPtr> ins = {x, w};
    if (bias) ins.push_back(bias);
    tape->record(ins, out, [x, w, bias, out, d, stride, padding, xplane,
                            oplane, wplane] {
      for (int c = 0; c < d.cin; ++c) {
        const Real* gy = out->grad.data() + c * oplane;
        for (int ki = 0; ki < d.k; ++ki) {
          for (int kj = 0; kj < d.k; ++kj) {
            if (x->requires_grad) {
              conv_tap_backward_x(w->data[c * wplane + ki * d.k + kj],
                                  x->grad.data() + c * xplane, gy, d.h, d.w,
                                  d.hout, d.wout, ki, kj, stride, padding);
            }
            if (w->requires_grad) {
              w->grad[c * wplane + ki * d.k + kj] += conv_tap_backward_w(
                  x->data.data() + c * xplane, gy, d.h, d.w, d.hout, d.wout,
                  ki, kj, stride, padding);
            }
          }
        }
        if (bias && bias->requires_grad) bias->grad[c] += K().sum(gy, oplane);
      }
    });
  }
  return out;
}

// --- Pixel shuffle ----------------------------------------------------------

TensorPtr pixel_shuffle(Tape* tape, const TensorPtr& x, int r) {
  if (x->rank() != 3) {
    dim_error("pixel_shuffle: input must be [C,H,W], got " +
              shape_str(x->shape));
  }
  int cr2 = x->dim(0), h = x->dim(1), w = x->dim(2);
  if (r < 1 || cr2 % (r * r) != 0) {
    dim_error("pixel_shuffle: channel count " + std::to_string(cr2) +
              " not divisible by r^2=" + std::to_string(r * r));
  }
  int c = cr2 / (r * r);
  auto out = make_like({c, h * r, w * r}, x->requires_grad);
  auto map_index = [=](int cc, int yy, int xx) {
    // out[cc, yy, xx] <- in[cc*r^2 + (yy%r)*r + (xx%r), yy/r, xx/r]
    int ic = cc * r * r + (yy % r) * r + (xx % r);
    return (static_cast<std::size_t>(ic) * h + yy / r) * w + xx / r;
  };
  for (int cc = 0; cc < c; ++cc)
    for (int yy = 0; yy < h * r; ++yy)
      for (int xx = 0; xx < w * r; ++xx)
        out->data[(static_cast<std::size_t>(cc) * h * r + yy) * (w * r) + xx] =
            x->data[map_index(cc, yy, xx)];
  if (tape && out->requires_grad) {
    tape->record({x}, out, [x, out, c, h, w, r, map_index] {
      for (int cc = 0; cc < c; ++cc)
        for (int yy = 0; yy < h * r; ++yy)
          for (int xx = 0; xx < w * r; ++xx)
            x->grad[map_index(cc, yy, xx)] +=
                out->grad[(static_cast<std::size_t>(cc) * h * r + yy) * (w * r) + xx];
    });
  }
  return out;
}

TensorPtr pixel_unshuffle(Tape* tape, const TensorPtr& x, int r) {
  if (x->rank() != 3) {
    dim_error("pixel_unshuffle: input must be [C,H,W], got " +
              shape_str(x->shape));
  }
  int c = x->dim(0), h = x->dim(1), w = x->dim(2);
  if (r < 1 || h % r != 0 || w % r != 0) {
    dim_error("pixel_unshuffle: spatial dims " + shape_str(x->shape) +
              " not divisible by r=" + std::to_string(r));
  }
  int ho = h / r, wo = w / r;
  auto out = make_like({c * r * r, ho, wo}, x->requires_grad);
  auto src_index = [=](int oc, int oy, int ox) {
    // out[c*r^2 + i*r + j, oy, ox] <- in[c, oy*r+i, ox*r+j]
    int cc = oc / (r * r);
    int i = (oc / r) % r;
    int j = oc % r;
    return (static_cast<std::size_t>(cc) * h + oy * r + i) * w + ox * r + j;
  };
  for (int oc = 0; oc < c * r * r; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox)
        out->data[(static_cast<std::size_t>(oc) * ho + oy) * wo + ox] =
            x->data[src_index(oc, oy, ox)];
  if (tape && out->requires_grad) {
    tape->record({x}, out, [x, out, c, r, ho, wo, src_index] {
      for (int oc = 0; oc < c * r * r; ++oc)
        for (int oy = 0; oy < ho; ++oy)
          for (int ox = 0; ox < wo; ++ox)
            x->grad[src_index(oc, oy, ox)] +=
                out->grad[(static_cast<std::size_t>(oc) * ho + oy) * wo + ox];
    });
  }
  return out;
}

// --- Channel ops ------------------------------------------------------------

TensorPtr channel_slice(Tape* tape, const TensorPtr& x, int c) {
  if (x->rank() != 3) {
    dim_error("channel_slice: input must be [C,H,W], got " +
              shape_str(x->shape));
  }
  if (c < 0 || c >= x->dim(0)) {
    dim_error("channel_slice: channel " + std::to_string(c) +
              " out of range for " + shape_str(x->shape));
  }
  int h = x->dim(1), w = x->dim(2);
  std::size_t plane = static_cast<std::size_t>(h) * w;
  auto out = make_like({h, w}, x->requires_grad);
  std::copy(x->data.begin() + c * plane, x->data.begin() + (c + 1) * plane,
            out->data.begin());
  if (tape && out->requires_grad) {
    tape->record({x}, out, [x, out, c, plane] {
      K().axpy(1.0, out->grad.data(), x->grad.data() + c * plane, plane);
    });
  }
  return out;
}

TensorPtr channel_stack(Tape* tape, const std::vector<TensorPtr>& channels) {
  if (channels.empty()) dim_error("channel_stack: no channels");
  int h = channels[0]->dim(0), w = channels[0]->dim(1);
  bool rg = false;
  for (const auto& ch : channels) {
    if (ch->rank() != 2 || ch->dim(0) != h || ch->dim(1) != w) {
      dim_error("channel_stack: inconsistent channel shape " +
                shape_str(ch->shape) + " vs " + shape_str(channels[0]->shape));
    }
    rg = rg || ch->requires_grad;
  }
  int c = static_cast<int>(channels.size());
  std::size_t plane = static_cast<std::size_t>(h) * w;
  auto out = make_like({c, h, w}, rg);
  for (int i = 0; i < c; ++i)
    std::copy(channels[i]->data.begin(), channels[i]->data.end(),
              out->data.begin() + i * plane);
  if (tape && rg) {
    tape->record(channels, out, [channels, out, plane] {
      for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i]->requires_grad) {
          K().axpy(1.0, out->grad.data() + i * plane,
                   channels[i]->grad.data(), plane);
        }
      }
    });
  }
  return out;
}

TensorPtr add_channel_bias(Tape* tape, const TensorPtr& x,
                           const TensorPtr& bias) {
  if (x->rank() != 3 || bias->shape != Shape{x->dim(0)}) {
    dim_error("add_channel_bias: bias " + shape_str(bias->shape) +
              " does not match channels of " + shape_str(x->shape));
  }
  int c = x->dim(0);
  std::size_t plane = static_cast<std::size_t>(x->dim(1)) * x->dim(2);
  bool rg = x->requires_grad || bias->requires_grad;
  auto out = make_like(x->shape, rg);
  for (int i = 0; i < c; ++i) {
    const Real* xp = x->data.data() + i * plane;
    Real* o = out->data.data() + i * plane;
    Real b = bias->data[i];
    for (std::size_t j = 0; j < plane; ++j) o[j] = xp[j] + b;
  }
  if (tape && rg) {
    tape->record({x, bias}, out, [x, bias, out, c, plane] {
      if (x->requires_grad) {
        K().axpy(1.0, out->grad.data(), x->grad.data(), out->numel());
      }
      if (bias->requires_grad) {
        for (int i = 0; i < c; ++i)
          bias->grad[i] += K().sum(out->grad.data() + i * plane, plane);
      }
    });
  }
  return out;
}

}  // namespace vjscc
