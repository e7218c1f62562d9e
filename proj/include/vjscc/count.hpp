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
#include <string>
#include <vector>

#include "vjscc/codec.hpp"

namespace vjscc {

// Analytic multiply-accumulate and parameter accounting for one full
// encode+decode forward pass of a single image. Conventions:
//   - convolution: Cout*Cin*k^2*Hout*Wout MACs, Cout*Cin*k^2 + Cout params
//   - depthwise convolution: C*k^2*Hout*Wout MACs, C*k^2 + C params
//   - fully connected: out*in MACs, out*in + out params
//   - scan module, per direction and channel:
//       projections          3*N*D + N^2 (+ D feed-through)   [".vs6.proj"]
//       discretization       N^3 + N^2                        [".vs6.zoh"]
//       scan core            D*(N^2 + 2N)                     [".vs6.scan"]
//   - elementwise multiplies (the branch gate): one MAC per element
//   - pure additions, reversal/reshape/transpose, layer norm, SiLU and exp
//     evaluations: zero MACs (no multiply-accumulate)
// The ".vs6.scan" term is the linear-complexity core: it is exactly
// proportional to the sequence length D, where self-attention over the same
// D tokens costs Theta(D^2) (see reference_attention_macs).
struct LayerCount {
  std::string name;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
};

struct CountReport {
  std::vector<LayerCount> layers;
  std::uint64_t total_macs() const;
  std::uint64_t total_params() const;
  // Sums over layers whose name contains `needle`.
  std::uint64_t macs_matching(const std::string& needle) const;
  std::uint64_t params_matching(const std::string& needle) const;
};

CountReport count_model(const ModelConfig& cfg);

// Scan-core MACs of one direction: D*(N^2 + 2N).
std::uint64_t scan_core_macs(int state_dim, int seq_len);

// Yardstick for the complexity contrast: one self-attention layer over
// seq_len tokens of width dim costs 4*seq_len*dim^2 (QKV + output
// projections) + 2*seq_len^2*dim (scores and weighted sum) MACs; the second
// term grows quadratically in sequence length.
std::uint64_t reference_attention_macs(int seq_len, int dim);

std::string format_report(const CountReport& report);

}  // namespace vjscc
