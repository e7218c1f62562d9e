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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vjscc/rng.hpp"

namespace vjscc {

using Real = double;
using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Row-major N-d array. Immutable after creation except for gradient
// accumulation; `grad`, once populated, always matches `data` in length.
struct Tensor {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until a backward pass touches it
  bool requires_grad = false;

  std::size_t numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() {
    if (!grad.empty()) grad.assign(grad.size(), 0.0);
  }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr tensor(Shape shape, std::vector<Real> data,
                 bool requires_grad = false);
TensorPtr zeros(Shape shape, bool requires_grad = false);
TensorPtr full(Shape shape, Real value, bool requires_grad = false);
TensorPtr scalar_tensor(Real value);
TensorPtr randn(Shape shape, Rng& rng, Real stddev,
                bool requires_grad = false);

// Reverse-mode tape: an ordered list of recorded primitives. Inputs always
// precede the operations consuming them, and one backward pass visits every
// entry exactly once in reverse. A tape is single-threaded; independent
// tapes on separate threads share no mutable state.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  // Called by primitives. The backward fn may assume the grad buffers of
  // `output` and of every input with requires_grad are allocated.
  void record(std::vector<TensorPtr> inputs, TensorPtr output, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and runs all entries in reverse. Errors on a
  // non-scalar loss, an empty tape, or a second call without reset().
  void backward(const TensorPtr& loss);

  void reset();
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::vector<TensorPtr> inputs;
    TensorPtr output;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  bool consumed_ = false;
};

// --- Primitives -----------------------------------------------------------
// All primitives accept tape == nullptr for recording-free evaluation.
// Binary ops require identical shapes; the only broadcasting anywhere is
// scalar-tensor (add_scalar / mul_scalar) and per-channel bias addition.

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr add_scalar(Tape* tape, const TensorPtr& a, Real s);
TensorPtr mul_scalar(Tape* tape, const TensorPtr& a, Real s);
TensorPtr exp(Tape* tape, const TensorPtr& a);
TensorPtr reciprocal(Tape* tape, const TensorPtr& a);
TensorPtr clamp_max(Tape* tape, const TensorPtr& a, Real cap);

// x * sigmoid(x); swish with unit slope is the same function.
TensorPtr silu(Tape* tape, const TensorPtr& a);
inline TensorPtr swish(Tape* tape, const TensorPtr& a) {
  return silu(tape, a);
}

// Axis-free full reversal of the flattened element order.
TensorPtr reverse(Tape* tape, const TensorPtr& a);
TensorPtr transpose2d(Tape* tape, const TensorPtr& a);
TensorPtr reshape(Tape* tape, const TensorPtr& a, Shape new_shape);
TensorPtr sum(Tape* tape, const TensorPtr& a);  // -> shape {1}

// [m,k] x [k,n] -> [m,n]; gradients dA = dY B^T, dB = A^T dY.
TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b);

// Normalizes the last axis to zero mean / unit variance (population
// variance), then applies the affine pair. gamma/beta have length d.
TensorPtr layer_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                     const TensorPtr& beta, Real eps);

// Cross-correlation (no kernel flip). x: [Cin,H,W], w: [Cout,Cin,k,k],
// bias: [Cout] or null. Output spatial size floor((H+2p-k)/s)+1 must be
// positive.
TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& bias, int stride, int padding);

// Per-channel convolution: x [C,H,W], w [C,k,k], bias [C] or null.
TensorPtr depthwise_conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                           const TensorPtr& bias, int stride, int padding);

// [C*r^2, H, W] -> [C, rH, rW]; output channel c at in-cell offset (i,j)
// reads input channel c*r^2 + i*r + j.
TensorPtr pixel_shuffle(Tape* tape, const TensorPtr& x, int r);
// Exact inverse of pixel_shuffle: [C, H, W] -> [C*r^2, H/r, W/r].
TensorPtr pixel_unshuffle(Tape* tape, const TensorPtr& x, int r);

TensorPtr channel_slice(Tape* tape, const TensorPtr& x, int c);  // -> [H,W]
TensorPtr channel_stack(Tape* tape, const std::vector<TensorPtr>& channels);
// x [C,H,W] + bias [C], one scalar broadcast over each channel plane.
TensorPtr add_channel_bias(Tape* tape, const TensorPtr& x,
                           const TensorPtr& bias);

}  // namespace vjscc
