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

#include "vjscc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "vjscc/metrics.hpp"
#include "vjscc/optim.hpp"

namespace vjscc {

TensorPtr run_pipeline(Tape* tape, const Model& model, const TensorPtr& image,
                       double snr_db, ChannelKind kind,
                       std::uint64_t chan_seed) {
  // The channel may run at snr_db = +inf (noiseless diagnostic), but the
  // CSI coding needs a finite dB value; clamp to a physical range.
  double coded_snr = std::clamp(snr_db, -30.0, 30.0);
  TensorPtr tx = model.encode(tape, image, coded_snr);
  ChannelSignal sig = power_normalize(tape, tx);
  ChannelRealization real = draw_realization(kind, snr_db, chan_seed);
  ChannelSignal received = transmit(tape, sig, real);
  ChannelSignal equalized = mmse_equalize(tape, received, real);
  return model.decode(tape, equalized.symbols, coded_snr);
}

TrainResult train_model(const TrainConfig& cfg, Model& model,
                        const Dataset& data, const std::string& out_dir) {
  if (data.empty()) {
    throw std::invalid_argument("train: dataset is empty");
  }
  int crop_size = cfg.crop > 0 ? cfg.crop : model.config.image_size;
  if (crop_size != model.config.image_size) {
    throw std::invalid_argument("train: crop " + std::to_string(crop_size) +
                                " does not match model image size " +
                                std::to_string(model.config.image_size));
  }
  bool adaptive = model.config.csi_mode == CsiMode::embed;

  std::vector<TensorPtr> params;
  for (auto& [name, t] : model.named_parameters()) params.push_back(t);
  Adam opt(params, cfg.lr);

  Rng order_rng(mix_seed(cfg.seed, 0xA11CE));
  Rng crop_rng(mix_seed(cfg.seed, 0xC409));
  Rng snr_rng(mix_seed(cfg.seed, 0x54A9));

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();  // forces an initial shuffle

  TrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(cfg.steps));
  Tape tape;
  for (int step = 0; step < cfg.steps; ++step) {
    double batch_loss = 0.0;
    std::uint64_t batch_seed = mix_seed(cfg.seed, 0x57E9, static_cast<std::uint64_t>(step));
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::size_t j = order_rng.index(i);
          std::swap(order[i - 1], order[j]);
        }
        cursor = 0;
      }
      const TensorPtr& img = data.images[order[cursor++]];
      TensorPtr sample = random_crop(img, crop_size, crop_rng);
      double snr = adaptive ? snr_rng.uniform(cfg.snr_min, cfg.snr_max)
                            : cfg.snr_fixed;
      std::uint64_t chan_seed = mix_seed(batch_seed, static_cast<std::uint64_t>(b));
      TensorPtr out = run_pipeline(&tape, model, sample, snr, cfg.channel,
                                   chan_seed);
      TensorPtr loss = mse_loss(&tape, sample, out);
      TensorPtr scaled =
          mul_scalar(&tape, loss, 1.0 / static_cast<double>(cfg.batch_size));
      tape.backward(scaled);
      tape.reset();
      batch_loss += loss->data[0];
    }
    batch_loss /= static_cast<double>(cfg.batch_size);
    if (!std::isfinite(batch_loss)) {
      opt.zero_grad();
      throw std::runtime_error(
          "train: non-finite loss at step " + std::to_string(step) +
          " (batch seed " + std::to_string(batch_seed) + ")");
    }
    opt.step();
    opt.zero_grad();
    result.loss_curve.push_back(batch_loss);
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(std::filesystem::path(out_dir) / "loss_curve.csv");
    csv << "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i, result.loss_curve[i]);
      csv << buf;
    }
  }
  return result;
}

EvalReport eval_sweep(const Model& model, const Dataset& data,
                      const std::vector<double>& snrs, ChannelKind kind,
                      std::uint64_t seed) {
  EvalReport report;
  int size = model.config.image_size;
  for (std::size_t si = 0; si < snrs.size(); ++si) {
    double snr = snrs[si];
    double psnr_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t ii = 0; ii < data.size(); ++ii) {
      TensorPtr img = center_crop(data.images[ii], size);
      std::uint64_t chan_seed = mix_seed(seed, ii, si);
      TensorPtr out = run_pipeline(nullptr, model, img, snr, kind, chan_seed);
      double p = image_psnr_db(*img, *out);
      report.rows.push_back({data.ids[ii], snr, p});
      psnr_sum += p;
      ++count;
    }
    if (count > 0) {
      report.aggregates.emplace_back(snr, psnr_sum / static_cast<double>(count));
    }
  }
  return report;
}

namespace {

std::string psnr_field(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_sweep_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_sweep_csv: cannot open " + path);
  os << "image_id,snr_db,psnr_db\n";
  for (const auto& row : report.rows) {
    os << row.image_id << "," << format_snr(row.snr_db) << ","
       << psnr_field(row.psnr_db) << "\n";
  }
}

void write_aggregate_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_aggregate_csv: cannot open " + path);
  os << "snr_db,mean_psnr_db\n";
  for (const auto& [snr, mean] : report.aggregates) {
    os << format_snr(snr) << "," << psnr_field(mean) << "\n";
  }
}

void write_plot_data(const std::string& path, const EvalReport& report,
                     const std::string& series_name) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_plot_data: cannot open " + path);
  os << "# series: " << series_name << " (x: snr_db, y: mean_psnr_db)\n";
  for (const auto& [snr, mean] : report.aggregates) {
    os << format_snr(snr) << " " << psnr_field(mean) << "\n";
  }
}

TimingStats measure_inference(const Model& model, const TensorPtr& image,
                              double snr_db, ChannelKind kind, int warmup,
                              int iterations) {
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < warmup; ++i) {
    run_pipeline(nullptr, model, image, snr_db, kind, mix_seed(7, i));
  }
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    auto t0 = clock::now();
    run_pipeline(nullptr, model, image, snr_db, kind, mix_seed(11, i));
    auto t1 = clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  TimingStats stats;
  stats.iterations = iterations;
  stats.min_ms = sorted.front();
  stats.max_ms = sorted.back();
  stats.median_ms = (iterations % 2 == 1)
                        ? sorted[iterations / 2]
                        : 0.5 * (sorted[iterations / 2 - 1] + sorted[iterations / 2]);
  double total = 0.0;
  for (double v : ms) total += v;
  stats.mean_ms = total / iterations;
  return stats;
}

}  // namespace vjscc
