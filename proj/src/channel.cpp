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

#include "vjscc/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vjscc/kernels.hpp"

namespace vjscc {

namespace {

void check_packed(const char* op, const Tensor& x) {
  if (x.rank() != 3 || x.dim(0) % 2 != 0) {
    throw std::invalid_argument(
        std::string(op) +
        ": expected [2c,h,w] packed complex tensor, got " +
        shape_str(x.shape));
  }
}

}  // namespace

double ChannelRealization::noise_variance() const {
  if (std::isinf(snr_db)) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

ChannelRealization draw_realization(ChannelKind kind, double snr_db,
                                    std::uint64_t seed) {
  ChannelRealization real;
  real.kind = kind;
  real.snr_db = snr_db;
  Rng rng(seed);
  if (kind == ChannelKind::rayleigh) {
    // h ~ CN(0,1): each component N(0, 1/2).
    double s = std::sqrt(0.5);
    real.h_re = s * rng.normal();
    real.h_im = s * rng.normal();
  }
  real.noise_seed = rng.next_u64();
  return real;
}

ChannelSignal power_normalize(Tape* tape, const TensorPtr& x) {
  check_packed("power_normalize", *x);
  std::size_t n = x->numel();
  std::size_t symbols = n / 2;
  double q = kernels::active().dot(x->data.data(), x->data.data(), n);
  ChannelSignal sig;
  if (q == 0.0) {
    sig.symbols = mul_scalar(tape, x, 1.0);  // pass-through copy, grads flow
    sig.power_scale = 1.0;
    sig.degenerate_power = true;
    return sig;
  }
  double scale = std::sqrt(static_cast<double>(symbols) / q);
  auto out = zeros(x->shape, x->requires_grad);
  kernels::active().scale(x->data.data(), scale, out->data.data(), n);
  if (tape && x->requires_grad) {
    tape->record({x}, out, [x, out, scale, q, n] {
      // out = s(x) x with s = sqrt(K/q), q = sum x^2:
      // dx = s g - (s/q) (g . x) x
      double gdotx =
          kernels::active().dot(out->grad.data(), x->data.data(), n);
      kernels::active().axpy(scale, out->grad.data(), x->grad.data(), n);
      kernels::active().axpy(-scale * gdotx / q, x->data.data(),
                             x->grad.data(), n);
    });
  }
  sig.symbols = out;
  sig.power_scale = scale;
  return sig;
}

TensorPtr complex_scale(Tape* tape, const TensorPtr& x, double c_re,
                        double c_im) {
  check_packed("complex_scale", *x);
  int pairs = x->dim(0) / 2;
  std::size_t plane = static_cast<std::size_t>(x->dim(1)) * x->dim(2);
  auto out = zeros(x->shape, x->requires_grad);
  for (int p = 0; p < pairs; ++p) {
    const Real* xr = x->data.data() + (2 * p) * plane;
    const Real* xi = x->data.data() + (2 * p + 1) * plane;
    Real* yr = out->data.data() + (2 * p) * plane;
    Real* yi = out->data.data() + (2 * p + 1) * plane;
    for (std::size_t k = 0; k < plane; ++k) {
      yr[k] = c_re * xr[k] - c_im * xi[k];
      yi[k] = c_re * xi[k] + c_im * xr[k];
    }
  }
  if (tape && x->requires_grad) {
    tape->record({x}, out, [x, out, c_re, c_im, pairs, plane] {
      // dx = conj(c) * dy per complex symbol
      for (int p = 0; p < pairs; ++p) {
        const Real* gr = out->grad.data() + (2 * p) * plane;
        const Real* gi = out->grad.data() + (2 * p + 1) * plane;
        Real* dxr = x->grad.data() + (2 * p) * plane;
        Real* dxi = x->grad.data() + (2 * p + 1) * plane;
        for (std::size_t k = 0; k < plane; ++k) {
          dxr[k] += c_re * gr[k] + c_im * gi[k];
          dxi[k] += -c_im * gr[k] + c_re * gi[k];
        }
      }
    });
  }
  return out;
}

ChannelSignal transmit(Tape* tape, const ChannelSignal& sig,
                       const ChannelRealization& real) {
  check_packed("transmit", *sig.symbols);
  double sigma2 = real.noise_variance();
  TensorPtr x = sig.symbols;
  if (real.kind == ChannelKind::rayleigh) {
    x = complex_scale(tape, x, real.h_re, real.h_im);
  }
  ChannelSignal out = sig;
  if (sigma2 == 0.0) {
    out.symbols = x;
    return out;
  }
  // Component noise N(0, sigma^2/2); sampled per complex symbol so the
  // Box-Muller pair lands on (real, imag).
  Rng noise_rng(real.noise_seed);
  double comp_std = std::sqrt(sigma2 / 2.0);
  auto noise = zeros(x->shape);
  int pairs = x->dim(0) / 2;
  std::size_t plane = static_cast<std::size_t>(x->dim(1)) * x->dim(2);
  for (int p = 0; p < pairs; ++p) {
    Real* nr = noise->data.data() + (2 * p) * plane;
    Real* ni = noise->data.data() + (2 * p + 1) * plane;
    for (std::size_t k = 0; k < plane; ++k) {
      nr[k] = comp_std * noise_rng.normal();
      ni[k] = comp_std * noise_rng.normal();
    }
  }
  out.symbols = add(tape, x, noise);
  return out;
}

ChannelSignal mmse_equalize(Tape* tape, const ChannelSignal& y,
                            const ChannelRealization& real) {
  if (real.kind == ChannelKind::awgn) return y;
  double sigma2 = real.noise_variance();
  double denom = real.h_re * real.h_re + real.h_im * real.h_im + sigma2;
  if (denom == 0.0) {
    throw std::runtime_error("mmse_equalize: zero fading gain and noise");
  }
  ChannelSignal out = y;
  out.symbols =
      complex_scale(tape, y.symbols, real.h_re / denom, -real.h_im / denom);
  return out;
}

}  // namespace vjscc
