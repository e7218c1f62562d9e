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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vjscc/checkpoint.hpp"
#include "vjscc/config.hpp"
#include "vjscc/count.hpp"
#include "vjscc/dataset.hpp"
#include "vjscc/gradcheck.hpp"
#include "vjscc/kernels.hpp"
#include "vjscc/metrics.hpp"
#include "vjscc/train.hpp"
#include "vjscc/vs6.hpp"

namespace fs = std::filesystem;
using namespace vjscc;

namespace {

struct CliFlags {
  std::string config_file;
  std::string seed;
  std::string channel;
  std::string snr;
  std::string csi;
  std::string out;
  std::string data;
  std::string ckpt;
  std::string steps;
  std::string lr;
};

void add_common_flags(CLI::App* cmd, CliFlags& flags) {
  cmd->add_option("--config", flags.config_file, "flat key=value config file");
  cmd->add_option("--seed", flags.seed, "master seed (u64)");
  cmd->add_option("--channel", flags.channel, "awgn|rayleigh");
  cmd->add_option("--snr", flags.snr,
                  "SNR dB value or comma list; 'inf' is noiseless");
  cmd->add_option("--csi", flags.csi, "off|embed");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--data", flags.data, "image directory or 'synthetic'");
  cmd->add_option("--ckpt", flags.ckpt, "checkpoint directory");
  cmd->add_option("--steps", flags.steps, "training steps");
  cmd->add_option("--lr", flags.lr, "learning rate");
}

AppConfig resolve_config(const CliFlags& flags, bool snr_is_list) {
  AppConfig cfg = AppConfig::desk_defaults();
  if (!flags.config_file.empty()) {
    cfg = parse_config_file(flags.config_file, cfg);
  }
  if (!flags.seed.empty()) apply_config_kv(cfg, "seed", flags.seed);
  if (!flags.channel.empty()) apply_config_kv(cfg, "channel", flags.channel);
  if (!flags.snr.empty()) {
    apply_config_kv(cfg, snr_is_list ? "snrs" : "snr", flags.snr);
  }
  if (!flags.csi.empty()) apply_config_kv(cfg, "csi_mode", flags.csi);
  if (!flags.out.empty()) apply_config_kv(cfg, "out", flags.out);
  if (!flags.data.empty()) apply_config_kv(cfg, "data", flags.data);
  if (!flags.ckpt.empty()) apply_config_kv(cfg, "checkpoint", flags.ckpt);
  if (!flags.steps.empty()) apply_config_kv(cfg, "steps", flags.steps);
  if (!flags.lr.empty()) apply_config_kv(cfg, "lr", flags.lr);
  return cfg;
}

Dataset load_dataset(const AppConfig& cfg, int min_size) {
  if (cfg.data == "synthetic") {
    return synthetic_dataset(cfg.synthetic_count, cfg.model.image_size,
                             cfg.model.image_size,
                             mix_seed(cfg.train.seed, 0xDA7A));
  }
  Dataset ds = load_image_dir(cfg.data, min_size);
  if (ds.empty()) {
    throw std::runtime_error("no usable images found in " + cfg.data);
  }
  return ds;
}

void write_run_manifest(const std::string& out_dir, const AppConfig& cfg,
                        const std::string& ckpt_dir) {
  fs::create_directories(out_dir);
  std::ofstream os(fs::path(out_dir) / "run_manifest.txt");
  os << render_config(cfg);
  os << "kernel_backend = " << kernels::backend_name(kernels::active_backend())
     << "\n";
  if (!ckpt_dir.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      checkpoint_content_hash(ckpt_dir)));
    os << "checkpoint_hash = fnv1a64:" << buf << "\n";
  }
}

int cmd_train(const CliFlags& flags) {
  AppConfig cfg = resolve_config(flags, /*snr_is_list=*/false);
  cfg.model.validate();
  Dataset data = load_dataset(cfg, cfg.model.image_size);
  Model model = Model::init(cfg.model, cfg.train.seed);
  std::cerr << "training: " << cfg.train.steps << " steps, " << data.size()
            << " images, channel " << channel_kind_name(cfg.train.channel)
            << ", csi " << csi_mode_name(cfg.model.csi_mode) << "\n";
  TrainResult result = train_model(cfg.train, model, data, cfg.out_dir);
  std::string ckpt_dir = (fs::path(cfg.out_dir) / "ckpt").string();
  save_checkpoint(ckpt_dir, model);
  write_run_manifest(cfg.out_dir, cfg, ckpt_dir);
  std::printf("steps %d  first_loss %.6g  final_loss %.6g\n", cfg.train.steps,
              result.loss_curve.empty() ? 0.0 : result.loss_curve.front(),
              result.loss_curve.empty() ? 0.0 : result.loss_curve.back());
  std::printf("checkpoint: %s\n", ckpt_dir.c_str());
  return 0;
}

Model require_checkpoint(const AppConfig& cfg) {
  if (cfg.checkpoint.empty()) {
    throw std::runtime_error(
        "missing checkpoint: pass --ckpt <dir> or set 'checkpoint' in the "
        "config");
  }
  return load_checkpoint(cfg.checkpoint);
}

int cmd_sweep(const CliFlags& flags) {
  AppConfig cfg = resolve_config(flags, /*snr_is_list=*/true);
  Model model = require_checkpoint(cfg);
  cfg.model = model.config;
  Dataset data = load_dataset(cfg, model.config.image_size);
  EvalReport report =
      eval_sweep(model, data, cfg.snrs, cfg.train.channel, cfg.train.seed);
  fs::create_directories(cfg.out_dir);
  write_sweep_csv((fs::path(cfg.out_dir) / "sweep.csv").string(), report);
  write_aggregate_csv((fs::path(cfg.out_dir) / "sweep_agg.csv").string(),
                      report);
  write_plot_data((fs::path(cfg.out_dir) / "plot.dat").string(), report,
                  std::string("psnr_vs_snr_") +
                      channel_kind_name(cfg.train.channel));
  write_run_manifest(cfg.out_dir, cfg, cfg.checkpoint);
  for (const auto& [snr, mean] : report.aggregates) {
    std::printf("snr %s  mean_psnr %.4f dB\n", format_snr(snr).c_str(), mean);
  }
  std::printf("wrote %s/sweep.csv (%zu rows)\n", cfg.out_dir.c_str(),
              report.rows.size());
  return 0;
}

int cmd_eval(const CliFlags& flags) {
  AppConfig cfg = resolve_config(flags, /*snr_is_list=*/true);
  Model model = require_checkpoint(cfg);
  cfg.model = model.config;
  Dataset data = load_dataset(cfg, model.config.image_size);
  EvalReport report =
      eval_sweep(model, data, cfg.snrs, cfg.train.channel, cfg.train.seed);
  CountReport counts = count_model(model.config);
  TensorPtr probe = center_crop(data.images[0], model.config.image_size);
  TimingStats timing =
      measure_inference(model, probe, 10.0, cfg.train.channel);

  fs::create_directories(cfg.out_dir);
  write_sweep_csv((fs::path(cfg.out_dir) / "eval.csv").string(), report);
  write_aggregate_csv((fs::path(cfg.out_dir) / "eval_agg.csv").string(),
                      report);
  write_run_manifest(cfg.out_dir, cfg, cfg.checkpoint);

  std::ofstream rep(fs::path(cfg.out_dir) / "eval_report.txt");
  rep << "params " << counts.total_params() << "\n";
  rep << "macs " << counts.total_macs() << "\n";
  rep << "inference_delay_ms_median " << timing.median_ms << "\n";
  rep << "inference_delay_ms_mean " << timing.mean_ms << "\n";
  for (const auto& [snr, mean] : report.aggregates) {
    rep << "mean_psnr_db " << format_snr(snr) << " " << mean << "\n";
  }

  std::printf("model: %llu parameters, %llu MACs per image\n",
              static_cast<unsigned long long>(counts.total_params()),
              static_cast<unsigned long long>(counts.total_macs()));
  std::printf(
      "inference delay: median %.3f ms (min %.3f, mean %.3f, max %.3f, "
      "n=%d)\n",
      timing.median_ms, timing.min_ms, timing.mean_ms, timing.max_ms,
      timing.iterations);
  for (const auto& [snr, mean] : report.aggregates) {
    std::printf("snr %s  mean_psnr %.4f dB\n", format_snr(snr).c_str(), mean);
  }
  return 0;
}

int cmd_count(const CliFlags& flags) {
  AppConfig cfg = resolve_config(flags, /*snr_is_list=*/true);
  if (!cfg.checkpoint.empty()) {
    Model model = load_checkpoint(cfg.checkpoint);
    cfg.model = model.config;
  }
  CountReport report = count_model(cfg.model);
  std::fputs(format_report(report).c_str(), stdout);
  std::printf("scan_core_macs_total\t%llu\n",
              static_cast<unsigned long long>(
                  report.macs_matching(".vs6.scan")));
  return 0;
}

int cmd_timeit(const CliFlags& flags) {
  AppConfig cfg = resolve_config(flags, /*snr_is_list=*/false);
  Model model = cfg.checkpoint.empty()
                    ? Model::init(cfg.model, cfg.train.seed)
                    : load_checkpoint(cfg.checkpoint);
  cfg.model = model.config;
  Dataset data = load_dataset(cfg, model.config.image_size);
  TensorPtr probe = center_crop(data.images[0], model.config.image_size);
  TimingStats timing = measure_inference(model, probe, cfg.train.snr_fixed,
                                         cfg.train.channel);
  std::printf(
      "encode+channel+decode on %dx%d: median %.3f ms (min %.3f, mean %.3f, "
      "max %.3f, n=%d, warmup 5)\n",
      model.config.image_size, model.config.image_size, timing.median_ms,
      timing.min_ms, timing.mean_ms, timing.max_ms, timing.iterations);
  return 0;
}

int cmd_gradcheck(const CliFlags& flags) {
  AppConfig cfg = resolve_config(flags, /*snr_is_list=*/false);
  std::uint64_t seed = cfg.train.seed;
  int failures = 0;
  auto report = [&failures](const GradCheckResult& r) {
    std::printf("%-28s %s  max_rel_err %.3e  (%zu entries)\n", r.label.c_str(),
                r.pass ? "PASS" : "FAIL", r.max_rel_err, r.entries_checked);
    if (!r.pass) ++failures;
  };

  {
    Rng rng(seed);
    auto a = randn({3, 4}, rng, 1.0, true);
    auto b = randn({3, 4}, rng, 1.0, true);
    auto w = randn({4, 2}, rng, 1.0, true);
    report(check_gradients(
        "elementwise+matmul",
        [&](Tape* t) { return sum(t, matmul(t, silu(t, mul(t, a, b)), w)); },
        {a, b, w}, 1e-4, 1e-5));
  }
  {
    Rng rng(mix_seed(seed, 2));
    VssmBlockParams bp = init_vssm_block(2, 2, 2, 4, 4, rng);
    auto x = randn({2, 4, 4}, rng, 0.7, true);
    auto csi_add = randn({4}, rng, 0.3, true);
    std::vector<TensorPtr> wrt = {bp.ln_gamma, bp.in_w, bp.dw_w,
                                  bp.gate_w,   bp.out_w, x,
                                  csi_add};
    for (auto& v : bp.vs6) {
      for (auto& d : v.dir) {
        wrt.push_back(d.H1);
        wrt.push_back(d.A);
        wrt.push_back(d.delta);
      }
    }
    report(check_gradients(
        "vssm_block+csi",
        [&](Tape* t) { return sum(t, vssm_block_forward(t, x, bp, csi_add)); },
        wrt, 1e-4, 1e-5, /*max_entries_per_tensor=*/16, seed));
  }
  {
    ModelConfig mc;
    mc.image_size = 16;
    mc.channels = {4, 8};
    mc.blocks = {1, 1};
    mc.cbr_num = 1;
    mc.cbr_den = 4;
    mc.state_dim = 2;
    mc.csi_dim = 4;
    Model model = Model::init(mc, mix_seed(seed, 3));
    Dataset data = synthetic_dataset(1, 16, 16, mix_seed(seed, 4));
    std::vector<TensorPtr> wrt;
    for (auto& [name, t] : model.named_parameters()) wrt.push_back(t);
    report(check_gradients(
        "pipeline(16px,awgn@10dB)",
        [&](Tape* t) {
          TensorPtr out = run_pipeline(t, model, data.images[0], 10.0,
                                       ChannelKind::awgn, mix_seed(seed, 5));
          return mse_loss(t, data.images[0], out);
        },
        wrt, 1e-4, 1e-5, /*max_entries_per_tensor=*/2, seed));
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"state-space joint source-channel codec for wireless images"};
  app.require_subcommand(1);

  CliFlags train_flags, eval_flags, sweep_flags, count_flags, timeit_flags,
      gradcheck_flags;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train a model end to end over the channel");
  add_common_flags(train_cmd, train_flags);
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "PSNR sweep plus complexity and timing for a checkpoint");
  add_common_flags(eval_cmd, eval_flags);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "PSNR-vs-SNR sweep CSVs for a checkpoint");
  add_common_flags(sweep_cmd, sweep_flags);
  CLI::App* count_cmd =
      app.add_subcommand("count", "analytic per-layer MACs and parameters");
  add_common_flags(count_cmd, count_flags);
  CLI::App* timeit_cmd =
      app.add_subcommand("timeit", "median wall-clock of one full forward");
  add_common_flags(timeit_cmd, timeit_flags);
  CLI::App* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "compare reverse-mode gradients with finite differences");
  add_common_flags(gradcheck_cmd, gradcheck_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags);
    if (count_cmd->parsed()) return cmd_count(count_flags);
    if (timeit_cmd->parsed()) return cmd_timeit(timeit_flags);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
