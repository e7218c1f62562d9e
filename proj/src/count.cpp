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

#include "vjscc/count.hpp"

#include <sstream>

namespace vjscc {

namespace {

using u64 = std::uint64_t;

u64 conv_macs(int cout, int cin, int k, int hout, int wout) {
  return static_cast<u64>(cout) * cin * k * k * hout * wout;
}
u64 conv_params(int cout, int cin, int k) {
  return static_cast<u64>(cout) * cin * k * k + cout;
}
u64 fc_macs(int out, int in) { return static_cast<u64>(out) * in; }
u64 fc_params(int out, int in) { return static_cast<u64>(out) * in + out; }

void add_block(CountReport& r, const std::string& prefix, int c, int expand,
               int n, int hk, int m, bool csi) {
  int cz = c * expand;
  u64 plane = static_cast<u64>(hk) * hk;
  u64 d = plane;  // scan sequence length equals the stage plane
  r.layers.push_back({prefix + ".norm", 0, static_cast<u64>(2) * c});
  r.layers.push_back(
      {prefix + ".in", conv_macs(cz, c, 1, hk, hk), conv_params(cz, c, 1)});
  r.layers.push_back({prefix + ".dw",
                      static_cast<u64>(cz) * 9 * plane,
                      static_cast<u64>(cz) * 9 + cz});
  if (csi) {
    r.layers.push_back({prefix + ".csi", fc_macs(cz, m), fc_params(cz, m)});
  }
  u64 dirs = static_cast<u64>(4) * cz;
  u64 n2 = static_cast<u64>(n) * n;
  u64 proj_macs = dirs * (3 * static_cast<u64>(n) * d + n2 + d);
  u64 proj_params = dirs * (static_cast<u64>(n) + n2 + 3 * static_cast<u64>(n) * d + n2 + 1);
  r.layers.push_back({prefix + ".vs6.proj", proj_macs, proj_params});
  r.layers.push_back({prefix + ".vs6.zoh", dirs * (n2 * n + n2), 0});
  r.layers.push_back(
      {prefix + ".vs6.scan", dirs * scan_core_macs(n, static_cast<int>(d)), 0});
  r.layers.push_back(
      {prefix + ".gate", conv_macs(cz, c, 1, hk, hk), conv_params(cz, c, 1)});
  r.layers.push_back({prefix + ".gate_mul", static_cast<u64>(cz) * plane, 0});
  r.layers.push_back(
      {prefix + ".out", conv_macs(c, cz, 1, hk, hk), conv_params(c, cz, 1)});
}

void add_csi_encoder(CountReport& r, const std::string& prefix, int m) {
  r.layers.push_back({prefix + ".fc1", fc_macs(m, m), fc_params(m, m)});
  r.layers.push_back({prefix + ".fc2", fc_macs(m, m), fc_params(m, m)});
}

}  // namespace

u64 CountReport::total_macs() const {
  u64 t = 0;
  for (const auto& l : layers) t += l.macs;
  return t;
}

u64 CountReport::total_params() const {
  u64 t = 0;
  for (const auto& l : layers) t += l.params;
  return t;
}

u64 CountReport::macs_matching(const std::string& needle) const {
  u64 t = 0;
  for (const auto& l : layers)
    if (l.name.find(needle) != std::string::npos) t += l.macs;
  return t;
}

u64 CountReport::params_matching(const std::string& needle) const {
  u64 t = 0;
  for (const auto& l : layers)
    if (l.name.find(needle) != std::string::npos) t += l.params;
  return t;
}

u64 scan_core_macs(int state_dim, int seq_len) {
  u64 n = static_cast<u64>(state_dim);
  return static_cast<u64>(seq_len) * (n * n + 2 * n);
}

u64 reference_attention_macs(int seq_len, int dim) {
  u64 d = static_cast<u64>(seq_len);
  u64 c = static_cast<u64>(dim);
  return 4 * d * c * c + 2 * d * d * c;
}

CountReport count_model(const ModelConfig& cfg) {
  cfg.validate();
  CountReport r;
  int L = cfg.stages();
  int c2 = 2 * cfg.complex_channels();
  bool csi = cfg.csi_mode == CsiMode::embed;
  int m = cfg.csi_dim;
  int h1 = cfg.stage_size(1);

  if (csi) add_csi_encoder(r, "enc.csi", m);
  r.layers.push_back({"enc.embed",
                      conv_macs(cfg.channels[0], 3, cfg.patch_kernel, h1, h1),
                      conv_params(cfg.channels[0], 3, cfg.patch_kernel)});
  for (int k = 1; k <= L; ++k) {
    int hk = cfg.stage_size(k);
    if (k >= 2) {
      r.layers.push_back(
          {"enc.s" + std::to_string(k) + ".merge",
           conv_macs(cfg.channels[k - 1], 4 * cfg.channels[k - 2], 1, hk, hk),
           conv_params(cfg.channels[k - 1], 4 * cfg.channels[k - 2], 1)});
    }
    for (int b = 0; b < cfg.blocks[k - 1]; ++b) {
      add_block(r, "enc.s" + std::to_string(k) + ".b" + std::to_string(b),
                cfg.channels[k - 1], cfg.expand, cfg.state_dim, hk, m, csi);
    }
  }
  int hl = cfg.latent_size();
  r.layers.push_back({"enc.compress",
                      conv_macs(c2, cfg.channels[L - 1], 1, hl, hl),
                      conv_params(c2, cfg.channels[L - 1], 1)});

  if (csi) add_csi_encoder(r, "dec.csi", m);
  r.layers.push_back({"dec.expand",
                      conv_macs(cfg.channels[L - 1], c2, 1, hl, hl),
                      conv_params(cfg.channels[L - 1], c2, 1)});
  for (int k = L; k >= 1; --k) {
    int hk = cfg.stage_size(k);
    for (int b = 0; b < cfg.blocks[k - 1]; ++b) {
      add_block(r, "dec.s" + std::to_string(k) + ".b" + std::to_string(b),
                cfg.channels[k - 1], cfg.expand, cfg.state_dim, hk, m, csi);
    }
    int cout = (k >= 2) ? cfg.channels[k - 2] : 3;
    std::string p = "dec.s" + std::to_string(k) + ".divide";
    r.layers.push_back({p + ".norm", 0, static_cast<u64>(2) * cfg.channels[k - 1]});
    r.layers.push_back({p,
                        conv_macs(4 * cout, cfg.channels[k - 1], 1, hk, hk),
                        conv_params(4 * cout, cfg.channels[k - 1], 1)});
  }
  return r;
}

std::string format_report(const CountReport& report) {
  std::ostringstream os;
  os << "layer\tmacs\tparams\n";
  for (const auto& l : report.layers) {
    os << l.name << "\t" << l.macs << "\t" << l.params << "\n";
  }
  os << "total\t" << report.total_macs() << "\t" << report.total_params()
     << "\n";
  return os.str();
}

}  // namespace vjscc
