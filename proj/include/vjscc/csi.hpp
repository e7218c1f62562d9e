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

#include <memory>

#include "vjscc/tensor.hpp"

namespace vjscc {

// Channel-state conditioning. The scalar SNR (dB) is sine/cosine position
// coded, passed through a two-layer MLP shared by every block of one codec
// half, and injected into each block as one additive scalar per expanded
// channel.

// pe[2i] = sin(snr / 10000^(2i/d_pe)), pe[2i+1] = cos(same). d_pe must be
// even. The result is a constant (never differentiated).
TensorPtr sinusoidal_encode(double snr_db, int d_pe);

// One instance per codec half, shared by all of that half's blocks.
struct CsiEncoderParams {
  int d_pe = 0;  // position-coding width
  int m = 0;     // CSI vector length
  TensorPtr w1, b1;  // d_pe -> m
  TensorPtr w2, b2;  // m -> m
};

// u = FC2(swish(FC1(pe(snr)))), length m.
TensorPtr encode_csi(Tape* tape, double snr_db, const CsiEncoderParams& p);

// Per-block expansion of the shared CSI vector to one scalar per channel.
struct CsiEmbedParams {
  TensorPtr w, b;  // m -> c_z
};

// FC(u): the per-channel additive contribution of length c_z.
TensorPtr csi_channel_bias(Tape* tape, const TensorPtr& u,
                           const CsiEmbedParams& p);

// patches[c,:,:] + FC(u)[c]; identical shapes in and out.
TensorPtr embed_csi(Tape* tape, const TensorPtr& u, const CsiEmbedParams& p,
                    const TensorPtr& patches);

std::shared_ptr<CsiEncoderParams> init_csi_encoder(int d_pe, int m, Rng& rng);
CsiEmbedParams init_csi_embed(int m, int channels, Rng& rng);

}  // namespace vjscc
