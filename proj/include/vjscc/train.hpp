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

#include <string>
#include <vector>

#include "vjscc/config.hpp"
#include "vjscc/dataset.hpp"

namespace vjscc {

// encode -> power normalize -> channel -> equalize -> decode. The channel
// realization is drawn from chan_seed; snr_db = +inf takes the noiseless
// path.
TensorPtr run_pipeline(Tape* tape, const Model& model, const TensorPtr& image,
                       double snr_db, ChannelKind kind,
                       std::uint64_t chan_seed);

struct TrainResult {
  std::vector<double> loss_curve;  // mean batch MSE per step
};

// Adam over shuffled minibatches; per sample: crop, SNR draw, full pipeline,
// MSE, backward. Gradients average over the batch. A non-finite loss aborts
// with the offending step and batch seed in the message. When out_dir is
// non-empty, loss_curve.csv is written there.
TrainResult train_model(const TrainConfig& cfg, Model& model,
                        const Dataset& data, const std::string& out_dir);

struct EvalRow {
  std::string image_id;
  double snr_db = 0.0;
  double psnr_db = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // keyed by (image, snr), deterministic seeds
  std::vector<std::pair<double, double>> aggregates;  // (snr, mean psnr)
};

EvalReport eval_sweep(const Model& model, const Dataset& data,
                      const std::vector<double>& snrs, ChannelKind kind,
                      std::uint64_t seed);

void write_sweep_csv(const std::string& path, const EvalReport& report);
void write_aggregate_csv(const std::string& path, const EvalReport& report);
// x/y pairs per series for external plotting.
void write_plot_data(const std::string& path, const EvalReport& report,
                     const std::string& series_name);

struct TimingStats {
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  int iterations = 0;
};

// Median wall-clock of the full pipeline forward after warmup runs.
TimingStats measure_inference(const Model& model, const TensorPtr& image,
                              double snr_db, ChannelKind kind, int warmup = 5,
                              int iterations = 30);

}  // namespace vjscc
