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

#include "vjscc/channel.hpp"
#include "vjscc/codec.hpp"

namespace vjscc {

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 2;
  int steps = 2000;
  std::uint64_t seed = 1;
  ChannelKind channel = ChannelKind::awgn;
  // Models with CSI embedding sample the training SNR uniformly from
  // [snr_min, snr_max] per sample; others train at snr_fixed.
  double snr_fixed = 10.0;
  double snr_min = 1.0, snr_max = 20.0;
  int crop = 0;  // 0: use the model image size
};

// Flat key=value run configuration. Every key is listed in the README;
// unknown keys are errors.
struct AppConfig {
  ModelConfig model;
  TrainConfig train;
  std::vector<double> snrs{1, 5, 10, 15, 20};  // eval/sweep grid
  std::string data = "synthetic";
  int synthetic_count = 8;
  std::string out_dir = "out";
  std::string checkpoint;

  static AppConfig desk_defaults();
};

// Applies one key=value pair; throws on unknown keys or bad values.
void apply_config_kv(AppConfig& cfg, const std::string& key,
                     const std::string& value);

// Parses a flat key=value file ('#' comments, blank lines allowed) on top
// of `base`.
AppConfig parse_config_file(const std::string& path, AppConfig base);

// Resolved configuration echo, stable key order, values formatted so they
// parse back to identical state.
std::string render_config(const AppConfig& cfg);
std::string render_model_config(const ModelConfig& cfg);
ModelConfig parse_model_config_text(const std::string& text);

std::vector<double> parse_snr_list(const std::string& text);  // "inf" allowed
std::string format_snr(double snr);

const char* channel_kind_name(ChannelKind kind);
ChannelKind parse_channel_kind(const std::string& name);
const char* csi_mode_name(CsiMode mode);
CsiMode parse_csi_mode(const std::string& name);

}  // namespace vjscc
