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

#include <cstdint>

#include "vjscc/tensor.hpp"

namespace vjscc {

enum class ChannelKind { awgn, rayleigh };

// One channel use of a whole image: block fading (a single complex h per
// transmission) and a private noise stream. E[|h|^2] = 1. SNR is defined
// per complex symbol against unit signal power: sigma^2 = 10^(-snr_db/10);
// snr_db = +inf selects the exactly noiseless path.
struct ChannelRealization {
  ChannelKind kind = ChannelKind::awgn;
  double snr_db = 0.0;
  double h_re = 1.0, h_im = 0.0;  // rayleigh only
  std::uint64_t noise_seed = 0;

  double noise_variance() const;  // per complex symbol
};

ChannelRealization draw_realization(ChannelKind kind, double snr_db,
                                    std::uint64_t seed);

// Packed complex symbols: tensor [2c,h,w] where channel 2i holds real parts
// and 2i+1 the imaginary parts of complex channel i.
struct ChannelSignal {
  TensorPtr symbols;
  double power_scale = 1.0;  // multiplier applied by power_normalize
  bool degenerate_power = false;
};

// Scales the symbols so the mean complex-symbol power is one. Differentiable
// (the scale's dependence on the input is part of the gradient). An all-zero
// input is passed through with scale 1 and the degenerate flag set.
ChannelSignal power_normalize(Tape* tape, const TensorPtr& x);

// y = x + n (awgn) or y = h x + n (rayleigh). Noise and h are constants on
// the tape; gradients flow through x and the h-multiplication only.
ChannelSignal transmit(Tape* tape, const ChannelSignal& sig,
                       const ChannelRealization& real);

// Per-symbol MMSE estimate conj(h) y / (|h|^2 + sigma^2) for rayleigh;
// awgn passes through unchanged.
ChannelSignal mmse_equalize(Tape* tape, const ChannelSignal& y,
                            const ChannelRealization& real);

// Multiplies every complex symbol by the constant (c_re + i c_im).
TensorPtr complex_scale(Tape* tape, const TensorPtr& x, double c_re,
                        double c_im);

}  // namespace vjscc
