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

#include "vjscc/csi.hpp"

#include <cmath>
#include <stdexcept>

namespace vjscc {

namespace {

constexpr Real kWeightStd = 0.02;

// w [out,in] * v [in] + b [out] -> [out]
TensorPtr linear_vec(Tape* tape, const TensorPtr& w, const TensorPtr& b,
                     const TensorPtr& v) {
  int in = w->dim(1), out = w->dim(0);
  TensorPtr col = reshape(tape, v, {in, 1});
  TensorPtr y = matmul(tape, w, col);
  y = add(tape, y, reshape(tape, b, {out, 1}));
  return reshape(tape, y, {out});
}

}  // namespace

TensorPtr sinusoidal_encode(double snr_db, int d_pe) {
  if (d_pe < 2 || d_pe % 2 != 0) {
    throw std::invalid_argument("sinusoidal_encode: d_pe must be even, got " +
                                std::to_string(d_pe));
  }
  auto pe = zeros({d_pe});
  for (int i = 0; i < d_pe / 2; ++i) {
    double freq = std::pow(10000.0, -2.0 * i / d_pe);
    pe->data[2 * i] = std::sin(snr_db * freq);
    pe->data[2 * i + 1] = std::cos(snr_db * freq);
  }
  return pe;
}

TensorPtr encode_csi(Tape* tape, double snr_db, const CsiEncoderParams& p) {
  TensorPtr pe = sinusoidal_encode(snr_db, p.d_pe);
  TensorPtr h = swish(tape, linear_vec(tape, p.w1, p.b1, pe));
  return linear_vec(tape, p.w2, p.b2, h);
}

TensorPtr csi_channel_bias(Tape* tape, const TensorPtr& u,
                           const CsiEmbedParams& p) {
  return linear_vec(tape, p.w, p.b, u);
}

TensorPtr embed_csi(Tape* tape, const TensorPtr& u, const CsiEmbedParams& p,
                    const TensorPtr& patches) {
  if (patches->rank() != 3 || p.w->dim(0) != patches->dim(0)) {
    throw std::invalid_argument(
        "embed_csi: expansion to " + std::to_string(p.w->dim(0)) +
        " channels does not match patches " + shape_str(patches->shape));
  }
  return add_channel_bias(tape, patches, csi_channel_bias(tape, u, p));
}

std::shared_ptr<CsiEncoderParams> init_csi_encoder(int d_pe, int m, Rng& rng) {
  auto p = std::make_shared<CsiEncoderParams>();
  p->d_pe = d_pe;
  p->m = m;
  p->w1 = randn({m, d_pe}, rng, kWeightStd, true);
  p->b1 = zeros({m}, true);
  p->w2 = randn({m, m}, rng, kWeightStd, true);
  p->b2 = zeros({m}, true);
  return p;
}

CsiEmbedParams init_csi_embed(int m, int channels, Rng& rng) {
  CsiEmbedParams p;
  p.w = randn({channels, m}, rng, kWeightStd, true);
  p.b = zeros({channels}, true);
  return p;
}

}  // namespace vjscc
