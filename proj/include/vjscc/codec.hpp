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
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vjscc/csi.hpp"
#include "vjscc/tensor.hpp"
#include "vjscc/vs6.hpp"

namespace vjscc {

enum class CsiMode { off, embed };

// Architecture genotype. The hierarchy is dyadic: a stride-2 patch
// embedding, then one 2x spatial merge per additional stage, so encoder
// stage k runs at (channels[k-1], H/2^k, W/2^k). The decoder mirrors the
// ladder in reverse. Defaults are the full-scale configuration; desk() is
// the small CPU-trainable reference setup.
struct ModelConfig {
  int image_size = 256;  // square source images [3,H,H]
  std::vector<int> channels{128, 192, 256, 320};
  std::vector<int> blocks{2, 2, 6, 2};
  int cbr_num = 3, cbr_den = 128;  // channel bandwidth ratio as a fraction
  CsiMode csi_mode = CsiMode::embed;
  int state_dim = 16;   // N
  int expand = 2;       // E: block channel expansion
  int csi_dim = 128;    // m; the position-coding width d_pe equals m
  int patch_kernel = 2; // patch embedding kernel (stride is always 2)

  static ModelConfig desk();

  int stages() const { return static_cast<int>(channels.size()); }
  // Spatial edge at stage k (1-based).
  int stage_size(int k) const { return image_size >> k; }
  int latent_size() const { return stage_size(stages()); }
  // Complex symbols per image: round(cbr * 3 * H * W), exact in integers.
  std::int64_t complex_symbols() const;
  // Complex channels at the compression boundary; throws if the symbol
  // budget does not divide the latent grid.
  int complex_channels() const;
  void validate() const;
};

struct PatchEmbedParams {
  TensorPtr w, b;  // [c1, 3, k, k], stride 2
};
struct PatchMergeParams {
  TensorPtr w, b;  // 1x1 conv: 4*c_{k-1} -> c_k after space-to-channel regroup
};
struct PatchDivideParams {
  TensorPtr ln_gamma, ln_beta;  // over c_k
  TensorPtr w, b;               // 1x1 conv: c_k -> 4*c_out, then shuffle r=2
};
struct Conv1x1Params {
  TensorPtr w, b;
};

struct CodecBlock {
  VssmBlockParams core;
  bool has_csi = false;
  CsiEmbedParams csi;
};

struct EncoderParams {
  std::shared_ptr<CsiEncoderParams> csi_encoder;  // null when csi_mode=off
  PatchEmbedParams embed;
  std::vector<PatchMergeParams> merges;           // merges[k-2] enters stage k
  std::vector<std::vector<CodecBlock>> stages;    // stages[k-1]
  Conv1x1Params compress;                         // c_L -> 2c
};

struct DecoderParams {
  std::shared_ptr<CsiEncoderParams> csi_encoder;
  Conv1x1Params expand;                           // 2c -> c_L
  std::vector<std::vector<CodecBlock>> stages;
  std::vector<PatchDivideParams> divides;         // divides[k-1]: level k -> k-1
};

// --- Stage operations (also used standalone in tests) -----------------------

// [3,H,W] -> [c1, H/2, W/2] via stride-2 convolution.
TensorPtr patch_embed(Tape* tape, const TensorPtr& s,
                      const PatchEmbedParams& p, int kernel);
// Space-to-channel regroup (r=2) then 1x1 projection: halves the spatial
// size, 4*c_in -> c_out channels.
TensorPtr patch_merge(Tape* tape, const TensorPtr& x,
                      const PatchMergeParams& p);
// Layer norm, 1x1 expansion to 4*c_out, pixel shuffle (r=2): doubles the
// spatial size. Rejects anything but the dyadic 4:1 patch-count ratio.
TensorPtr patch_divide(Tape* tape, const TensorPtr& x,
                       const PatchDivideParams& p);
TensorPtr conv_compress(Tape* tape, const TensorPtr& x,
                        const Conv1x1Params& p);
TensorPtr conv_expand(Tape* tape, const TensorPtr& x, const Conv1x1Params& p);

// --- Whole model -------------------------------------------------------------

struct Model {
  ModelConfig config;
  EncoderParams enc;
  DecoderParams dec;

  static Model init(const ModelConfig& cfg, std::uint64_t seed);

  // [3,H,W] -> [2c, h_L, w_L] channel input (pre power normalization).
  TensorPtr encode(Tape* tape, const TensorPtr& image, double snr_db) const;
  // [2c, h_L, w_L] equalized symbols -> [3,H,W] reconstruction.
  TensorPtr decode(Tape* tape, const TensorPtr& symbols, double snr_db) const;

  // Deterministically ordered (name, tensor) registry; names are stable
  // across runs and used for checkpoints.
  std::vector<std::pair<std::string, TensorPtr>> named_parameters() const;
};

}  // namespace vjscc
