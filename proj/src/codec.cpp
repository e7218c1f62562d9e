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

#include "vjscc/codec.hpp"

#include <cmath>
#include <stdexcept>

namespace vjscc {

namespace {

constexpr Real kLnEps = 1e-5;

[[noreturn]] void config_error(const std::string& msg) {
  throw std::invalid_argument("config error: " + msg);
}

TensorPtr conv1x1(Tape* tape, const TensorPtr& x, const Conv1x1Params& p) {
  return conv2d(tape, x, p.w, p.b, 1, 0);
}

// Trunk convolutions (embed, merge, divide, compress, expand) are not
// residual, so their weights scale with fan-in to keep activation
// magnitudes stable through the ladder; a flat small init would shrink the
// signal per stage and leave power normalization ill-conditioned.
Real fan_in_std(int cin, int k) { return 1.0 / std::sqrt(Real(cin) * k * k); }

Conv1x1Params init_conv1x1(int cin, int cout, Rng& rng) {
  Conv1x1Params p;
  p.w = randn({cout, cin, 1, 1}, rng, fan_in_std(cin, 1), true);
  p.b = zeros({cout}, true);
  return p;
}

TensorPtr block_forward(Tape* tape, const TensorPtr& x, const CodecBlock& blk,
                        const TensorPtr& u) {
  TensorPtr csi_add;
  if (blk.has_csi && u) csi_add = csi_channel_bias(tape, u, blk.csi);
  return vssm_block_forward(tape, x, blk.core, csi_add);
}

void collect_block(const std::string& prefix, const CodecBlock& blk,
                   std::vector<std::pair<std::string, TensorPtr>>& out) {
  const VssmBlockParams& b = blk.core;
  out.emplace_back(prefix + ".norm.gamma", b.ln_gamma);
  out.emplace_back(prefix + ".norm.beta", b.ln_beta);
  out.emplace_back(prefix + ".in.w", b.in_w);
  out.emplace_back(prefix + ".in.b", b.in_b);
  out.emplace_back(prefix + ".dw.w", b.dw_w);
  out.emplace_back(prefix + ".dw.b", b.dw_b);
  out.emplace_back(prefix + ".gate.w", b.gate_w);
  out.emplace_back(prefix + ".gate.b", b.gate_b);
  out.emplace_back(prefix + ".out.w", b.out_w);
  out.emplace_back(prefix + ".out.b", b.out_b);
  for (std::size_t ch = 0; ch < b.vs6.size(); ++ch) {
    for (int j = 0; j < 4; ++j) {
      std::string dp = prefix + ".vs6.c" + std::to_string(ch) + ".d" +
                       std::to_string(j);
      const Vs6Direction& d = b.vs6[ch].dir[static_cast<std::size_t>(j)];
      out.emplace_back(dp + ".G", d.G);
      out.emplace_back(dp + ".delta", d.delta);
      out.emplace_back(dp + ".H1", d.H1);
      out.emplace_back(dp + ".H2", d.H2);
      out.emplace_back(dp + ".H3", d.H3);
      out.emplace_back(dp + ".A", d.A);
      out.emplace_back(dp + ".Dmat", d.Dmat);
    }
  }
  if (blk.has_csi) {
    out.emplace_back(prefix + ".csi.w", blk.csi.w);
    out.emplace_back(prefix + ".csi.b", blk.csi.b);
  }
}

void collect_csi_encoder(const std::string& prefix,
                         const std::shared_ptr<CsiEncoderParams>& p,
                         std::vector<std::pair<std::string, TensorPtr>>& out) {
  if (!p) return;
  out.emplace_back(prefix + ".w1", p->w1);
  out.emplace_back(prefix + ".b1", p->b1);
  out.emplace_back(prefix + ".w2", p->w2);
  out.emplace_back(prefix + ".b2", p->b2);
}

}  // namespace

ModelConfig ModelConfig::desk() {
  ModelConfig cfg;
  cfg.image_size = 32;
  cfg.channels = {8, 16};
  cfg.blocks = {1, 1};
  cfg.cbr_num = 1;
  cfg.cbr_den = 16;
  cfg.csi_mode = CsiMode::embed;
  cfg.state_dim = 4;
  cfg.expand = 2;
  cfg.csi_dim = 16;
  cfg.patch_kernel = 2;
  return cfg;
}

std::int64_t ModelConfig::complex_symbols() const {
  std::int64_t source = 3LL * image_size * image_size;
  std::int64_t num = source * cbr_num;
  // Nearest integer of num/den (den > 0).
  return (num + cbr_den / 2) / cbr_den;
}

int ModelConfig::complex_channels() const {
  std::int64_t grid = static_cast<std::int64_t>(latent_size()) * latent_size();
  std::int64_t symbols = complex_symbols();
  if (grid <= 0 || symbols <= 0 || symbols % grid != 0) {
    config_error("symbol budget " + std::to_string(symbols) +
                 " does not divide the latent grid " + std::to_string(grid) +
                 " into whole complex channels");
  }
  return static_cast<int>(symbols / grid);
}

void ModelConfig::validate() const {
  if (channels.empty() || channels.size() != blocks.size()) {
    config_error("channels and blocks lists must be non-empty and equal length");
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] < 1 || blocks[i] < 1) {
      config_error("channels and blocks must be positive");
    }
    if (i > 0 && channels[i] <= channels[i - 1]) {
      config_error("encoder channel widths must be strictly increasing");
    }
  }
  if (image_size < 1 || image_size % (1 << stages()) != 0) {
    config_error("image size " + std::to_string(image_size) +
                 " is not divisible by 2^" + std::to_string(stages()));
  }
  if (cbr_num < 1 || cbr_den < 1) config_error("cbr must be positive");
  if (state_dim < 1) config_error("state_dim must be >= 1");
  if (expand < 1) config_error("expand must be >= 1");
  if (csi_dim < 2 || csi_dim % 2 != 0) {
    config_error("csi_dim must be even and >= 2");
  }
  if (patch_kernel < 1) config_error("patch_kernel must be >= 1");
  complex_channels();  // throws when the budget does not fit
}

TensorPtr patch_embed(Tape* tape, const TensorPtr& s, const PatchEmbedParams& p,
                      int kernel) {
  if (s->rank() != 3 || s->dim(0) != 3) {
    throw std::invalid_argument("patch_embed: expected [3,H,W], got " +
                                shape_str(s->shape));
  }
  int pad = (kernel > 2) ? (kernel - 2 + 1) / 2 : 0;
  return conv2d(tape, s, p.w, p.b, 2, pad);
}

TensorPtr patch_merge(Tape* tape, const TensorPtr& x,
                      const PatchMergeParams& p) {
  if (x->dim(1) % 2 != 0 || x->dim(2) % 2 != 0) {
    throw std::invalid_argument("patch_merge: odd spatial dims " +
                                shape_str(x->shape));
  }
  return conv2d(tape, pixel_unshuffle(tape, x, 2), p.w, p.b, 1, 0);
}

TensorPtr patch_divide(Tape* tape, const TensorPtr& x,
                       const PatchDivideParams& p) {
  if (p.w->dim(0) % 4 != 0) {
    throw std::invalid_argument(
        "patch_divide: expansion must produce a 4:1 patch-count ratio, got " +
        shape_str(p.w->shape));
  }
  TensorPtr normed = layer_norm_chw(tape, x, p.ln_gamma, p.ln_beta, kLnEps);
  return pixel_shuffle(tape, conv2d(tape, normed, p.w, p.b, 1, 0), 2);
}

TensorPtr conv_compress(Tape* tape, const TensorPtr& x,
                        const Conv1x1Params& p) {
  return conv1x1(tape, x, p);
}

TensorPtr conv_expand(Tape* tape, const TensorPtr& x, const Conv1x1Params& p) {
  return conv1x1(tape, x, p);
}

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m;
  m.config = cfg;
  Rng rng(seed);
  int L = cfg.stages();
  int c2 = 2 * cfg.complex_channels();
  bool csi = cfg.csi_mode == CsiMode::embed;

  // Encoder.
  if (csi) m.enc.csi_encoder = init_csi_encoder(cfg.csi_dim, cfg.csi_dim, rng);
  m.enc.embed.w =
      randn({cfg.channels[0], 3, cfg.patch_kernel, cfg.patch_kernel}, rng,
            fan_in_std(3, cfg.patch_kernel), true);
  m.enc.embed.b = zeros({cfg.channels[0]}, true);
  for (int k = 2; k <= L; ++k) {
    PatchMergeParams pm;
    pm.w = randn({cfg.channels[k - 1], 4 * cfg.channels[k - 2], 1, 1}, rng,
                 fan_in_std(4 * cfg.channels[k - 2], 1), true);
    pm.b = zeros({cfg.channels[k - 1]}, true);
    m.enc.merges.push_back(std::move(pm));
  }
  for (int k = 1; k <= L; ++k) {
    std::vector<CodecBlock> blocks;
    int hk = cfg.stage_size(k);
    for (int b = 0; b < cfg.blocks[k - 1]; ++b) {
      CodecBlock blk;
      blk.core = init_vssm_block(cfg.channels[k - 1], cfg.expand,
                                 cfg.state_dim, hk, hk, rng);
      if (csi) {
        blk.has_csi = true;
        blk.csi = init_csi_embed(cfg.csi_dim,
                                 cfg.channels[k - 1] * cfg.expand, rng);
      }
      blocks.push_back(std::move(blk));
    }
    m.enc.stages.push_back(std::move(blocks));
  }
  m.enc.compress = init_conv1x1(cfg.channels[L - 1], c2, rng);

  // Decoder (independent parameter storage throughout).
  if (csi) m.dec.csi_encoder = init_csi_encoder(cfg.csi_dim, cfg.csi_dim, rng);
  m.dec.expand = init_conv1x1(c2, cfg.channels[L - 1], rng);
  for (int k = 1; k <= L; ++k) {
    std::vector<CodecBlock> blocks;
    int hk = cfg.stage_size(k);
    for (int b = 0; b < cfg.blocks[k - 1]; ++b) {
      CodecBlock blk;
      blk.core = init_vssm_block(cfg.channels[k - 1], cfg.expand,
                                 cfg.state_dim, hk, hk, rng);
      if (csi) {
        blk.has_csi = true;
        blk.csi = init_csi_embed(cfg.csi_dim,
                                 cfg.channels[k - 1] * cfg.expand, rng);
      }
      blocks.push_back(std::move(blk));
    }
    m.dec.stages.push_back(std::move(blocks));
  }
  for (int k = 1; k <= L; ++k) {
    // divides[k-1] maps level k to level k-1; level 0 is the 3-channel image.
    PatchDivideParams pd;
    int cin = cfg.channels[k - 1];
    int cout = (k >= 2) ? cfg.channels[k - 2] : 3;
    pd.ln_gamma = full({cin}, 1.0, true);
    pd.ln_beta = zeros({cin}, true);
    pd.w = randn({4 * cout, cin, 1, 1}, rng, fan_in_std(cin, 1), true);
    pd.b = zeros({4 * cout}, true);
    m.dec.divides.push_back(std::move(pd));
  }
  return m;
}

TensorPtr Model::encode(Tape* tape, const TensorPtr& image,
                        double snr_db) const {
  if (image->shape != Shape{3, config.image_size, config.image_size}) {
    throw std::invalid_argument("encode: expected image [3," +
                                std::to_string(config.image_size) + "," +
                                std::to_string(config.image_size) + "], got " +
                                shape_str(image->shape));
  }
  TensorPtr u;
  if (enc.csi_encoder) u = encode_csi(tape, snr_db, *enc.csi_encoder);
  TensorPtr x = patch_embed(tape, image, enc.embed, config.patch_kernel);
  int L = config.stages();
  for (int k = 1; k <= L; ++k) {
    if (k >= 2) x = patch_merge(tape, x, enc.merges[k - 2]);
    for (const CodecBlock& blk : enc.stages[k - 1]) {
      x = block_forward(tape, x, blk, u);
    }
  }
  return conv_compress(tape, x, enc.compress);
}

TensorPtr Model::decode(Tape* tape, const TensorPtr& symbols,
                        double snr_db) const {
  int hl = config.latent_size();
  if (symbols->shape != Shape{2 * config.complex_channels(), hl, hl}) {
    throw std::invalid_argument(
        "decode: expected symbols [" +
        std::to_string(2 * config.complex_channels()) + "," +
        std::to_string(hl) + "," + std::to_string(hl) + "], got " +
        shape_str(symbols->shape));
  }
  TensorPtr u;
  if (dec.csi_encoder) u = encode_csi(tape, snr_db, *dec.csi_encoder);
  TensorPtr x = conv_expand(tape, symbols, dec.expand);
  for (int k = config.stages(); k >= 1; --k) {
    for (const CodecBlock& blk : dec.stages[k - 1]) {
      x = block_forward(tape, x, blk, u);
    }
    x = patch_divide(tape, x, dec.divides[k - 1]);
  }
  return x;
}

std::vector<std::pair<std::string, TensorPtr>> Model::named_parameters()
    const {
  std::vector<std::pair<std::string, TensorPtr>> out;
  collect_csi_encoder("enc.csi", enc.csi_encoder, out);
  out.emplace_back("enc.embed.w", enc.embed.w);
  out.emplace_back("enc.embed.b", enc.embed.b);
  for (std::size_t i = 0; i < enc.merges.size(); ++i) {
    std::string p = "enc.s" + std::to_string(i + 2) + ".merge";
    out.emplace_back(p + ".w", enc.merges[i].w);
    out.emplace_back(p + ".b", enc.merges[i].b);
  }
  for (std::size_t k = 0; k < enc.stages.size(); ++k) {
    for (std::size_t b = 0; b < enc.stages[k].size(); ++b) {
      collect_block("enc.s" + std::to_string(k + 1) + ".b" + std::to_string(b),
                    enc.stages[k][b], out);
    }
  }
  out.emplace_back("enc.compress.w", enc.compress.w);
  out.emplace_back("enc.compress.b", enc.compress.b);

  collect_csi_encoder("dec.csi", dec.csi_encoder, out);
  out.emplace_back("dec.expand.w", dec.expand.w);
  out.emplace_back("dec.expand.b", dec.expand.b);
  for (std::size_t k = 0; k < dec.stages.size(); ++k) {
    for (std::size_t b = 0; b < dec.stages[k].size(); ++b) {
      collect_block("dec.s" + std::to_string(k + 1) + ".b" + std::to_string(b),
                    dec.stages[k][b], out);
    }
  }
  for (std::size_t k = 0; k < dec.divides.size(); ++k) {
    std::string p = "dec.s" + std::to_string(k + 1) + ".divide";
    out.emplace_back(p + ".norm.gamma", dec.divides[k].ln_gamma);
    out.emplace_back(p + ".norm.beta", dec.divides[k].ln_beta);
    out.emplace_back(p + ".w", dec.divides[k].w);
    out.emplace_back(p + ".b", dec.divides[k].b);
  }
  return out;
}

}  // namespace vjscc
