// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// dlgsa: train, evaluate and inspect DLGSANet models.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 numeric failure,
// 3 I/O or parse error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dlgsa/analysis.hpp"
#include "dlgsa/config_file.hpp"
#include "dlgsa/errors.hpp"
#include "dlgsa/grad_suite.hpp"
#include "dlgsa/kernels.hpp"
#include "dlgsa/train.hpp"

namespace {

using namespace dlgsa;

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;

struct Resolution {
  int w = 1280;
  int h = 720;
};

Resolution parse_resolution(const std::string& s) {
  Resolution r;
  char x = 0;
  std::istringstream in(s);
  if (!(in >> r.w >> x >> r.h) || (x != 'x' && x != 'X') || !in.eof() || r.w <= 0 || r.h <= 0) {
    throw UsageError("--res expects WxH, got '" + s + "'");
  }
  return r;
}

// A preset name, or a config file whose model section is used.
ModelConfig model_for(const std::string& config, int scale) {
  for (const auto& name : model_preset_names())
    if (config == name) return model_preset(name, scale > 0 ? scale : 4);
  ModelConfig m = load_train_config(config).model;
  if (scale > 0) m.scale = scale;
  m.validate();
  return m;
}

DatasetSpec dataset_for(const std::string& data) {
  if (data.rfind("synthetic(", 0) == 0 || data.rfind("directory(", 0) == 0) {
    return train_config_from_text("dataset = " + data + "\nbatch = 1\npatch = 1\n").dataset;
  }
  DatasetSpec d;
  d.kind = DatasetKind::kDirectory;
  d.path = data;
  return d;
}

void print_eval(const EvalResult& r) {
  std::printf("%-24s %9s %7s %9s %7s\n", "image", "psnr", "ssim", "bicubic", "ssim");
  for (const auto& s : r.images) {
    if (!s.error.empty()) {
      std::printf("%-24s error: %s\n", s.name.c_str(), s.error.c_str());
      continue;
    }
    std::printf("%-24s %9.3f %7.4f %9.3f %7.4f\n", s.name.c_str(), s.psnr, s.ssim, s.bicubic_psnr, s.bicubic_ssim);
  }
  std::printf("%-24s %9.3f %7.4f %9.3f %7.4f\n", "mean", r.mean_psnr, r.mean_ssim, r.mean_bicubic_psnr,
              r.mean_bicubic_ssim);
}

template <typename T>
int train(const TrainConfig& cfg, const std::string& out, const std::string& resume) {
  Dataset data = load_dataset(cfg.dataset);
  Trainer<T> trainer(cfg, data.images);
  if (!resume.empty()) trainer.restore(load_checkpoint<T>(resume));
  run_training(trainer, &std::cout);
  save_checkpoint(out, trainer.checkpoint());
  std::cout << "saved " << out << " at iteration " << trainer.iteration() << "\n";
  print_eval(evaluate(trainer.model(), data.images, cfg.tlc ? cfg.tlc_window : 0, data.names));
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"DLGSANet super-resolution: training, evaluation and cost analysis"};
  app.require_subcommand(1);
  std::string kernels;
  app.add_option("--kernels", kernels, "Kernel set: scalar or avx2 (default: best available)");

  std::string config, out = "dlgsa.ckpt", resume;
  int precision = 32;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a key=value config file");
  train_cmd->add_option("--config", config, "Config file")->required();
  train_cmd->add_option("--out", out, "Checkpoint to write");
  train_cmd->add_option("--resume", resume, "Checkpoint to resume from");
  train_cmd->add_option("--precision", precision, "32 or 64")->check(CLI::IsMember({32, 64}));

  std::string ckpt, data, in_path, out_path;
  bool tlc = false;
  int tlc_window = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Y-channel PSNR/SSIM of a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", data, "Directory with HR/*.ppm, or synthetic(seed, count, size)")->required();
  eval_cmd->add_flag("--tlc", tlc, "Tile inference with the training patch size");
  eval_cmd->add_option("--tlc-window", tlc_window, "Tile size (LR pixels) when --tlc is set");

  auto* sr_cmd = app.add_subcommand("sr", "Upscale one PPM image");
  sr_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  sr_cmd->add_option("--in", in_path, "Input PPM")->required();
  sr_cmd->add_option("--out", out_path, "Output PPM")->required();
  sr_cmd->add_flag("--tlc", tlc, "Tile inference with the training patch size");
  sr_cmd->add_option("--tlc-window", tlc_window, "Tile size (LR pixels) when --tlc is set");

  std::string count_config = "full", res = "1280x720";
  int scale = 0;
  bool csv = false, summary = false, sensitivity = false;
  auto* count_cmd = app.add_subcommand("count", "Parameter and MAC counts");
  count_cmd->add_option("--config", count_config, "full, light, tiny or a config file");
  count_cmd->add_option("--scale", scale, "Upscaling factor (2, 3 or 4)");
  count_cmd->add_option("--res", res, "Output resolution WxH");
  count_cmd->add_flag("--csv", csv, "CSV instead of text");
  count_cmd->add_flag("--summary", summary, "Totals only");
  count_cmd->add_flag("--sensitivity", sensitivity, "Totals over kernel size, squeeze and FFN ratio");

  std::string module = "all";
  std::uint64_t seed = 1;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks in 64-bit");
  grad_cmd->add_option("--module", module, "all, ops, mhdlsa, sparsegsa or network");
  grad_cmd->add_option("--seed", seed, "Random seed");
  double eps = 1e-5;
  bool verbose = false;
  grad_cmd->add_option("--eps", eps, "Central difference step");
  grad_cmd->add_flag("-v,--verbose", verbose, "Show the worst coordinate of each check");

  std::string suite;
  std::int64_t iters = 0;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train variants on the overfit benchmark");
  ablate_cmd->add_option("--suite", suite, "hdtb, attention or local")
      ->required()
      ->check(CLI::IsMember({"hdtb", "attention", "local"}));
  ablate_cmd->add_option("--config", config, "Base config file (default: the frozen benchmark)");
  ablate_cmd->add_option("--iters", iters, "Override the iteration budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (!kernels.empty() && !kernels::select(kernels)) {
    throw UsageError("kernel set '" + kernels + "' is not available on this machine");
  }

  if (*train_cmd) {
    const TrainConfig cfg = load_train_config(config);
    return precision == 64 ? train<double>(cfg, out, resume) : train<float>(cfg, out, resume);
  }
  if (*eval_cmd) {
    const Checkpoint<float> ck = load_checkpoint<float>(ckpt);
    const DlgsaNet<float> net = model_from_checkpoint(ck);
    const Dataset ds = load_dataset(dataset_for(data));
    const int window = tlc ? (tlc_window > 0 ? tlc_window : ck.config.patch) : 0;
    print_eval(evaluate(net, ds.images, window, ds.names));
    return 0;
  }
  if (*sr_cmd) {
    const Checkpoint<float> ck = load_checkpoint<float>(ckpt);
    const DlgsaNet<float> net = model_from_checkpoint(ck);
    const TensorF lr = image_to_tensor(load_ppm(in_path));
    ForwardOptions opt;
    if (tlc) opt.tlc_window = tlc_window > 0 ? tlc_window : ck.config.patch;
    NoGradGuard no_grad;
    const TensorF sr = model_forward(lr, net, opt);
    check_finite(sr, "sr output");
    save_ppm(out_path, tensor_to_image(sr));
    return 0;
  }
  if (*count_cmd) {
    const ModelConfig m = model_for(count_config, scale);
    const Resolution r = parse_resolution(res);
    if (sensitivity) {
      std::cout << format_sensitivity(sensitivity_table(m, r.w, r.h));
      return 0;
    }
    const CostReport report = count_macs(m, r.w, r.h);
    std::cout << (csv ? format_report_csv(report) : format_report_text(report, !summary));
    return 0;
  }
  if (*grad_cmd) {
    const double tolerance = 1e-4;
    bool ok = true;
    for (const auto& e : run_grad_suite(module, seed, 10, eps)) {
      const bool pass = e.report.max_rel_error < tolerance;
      ok = ok && pass;
      std::printf("%-44s coords %4lld  max rel err %.3e  %s\n", e.name.c_str(),
                  static_cast<long long>(e.report.coordinates), e.report.max_rel_error, pass ? "ok" : "FAIL");
      if (verbose) std::printf("    worst: %s\n", e.report.worst.c_str());
    }
    return ok ? 0 : kExitNumeric;
  }
  if (*ablate_cmd) {
    TrainConfig base = config.empty() ? overfit_benchmark_config() : load_train_config(config);
    if (iters > 0) {
      base.total_iters = iters;
      base.milestones.clear();
    }
    const auto rows = run_ablation(suite, base, &std::cerr);
    std::printf("%-24s %10s %10s %10s %10s\n", "variant", "params", "psnr", "bicubic", "loss");
    for (const auto& row : rows)
      std::printf("%-24s %10lld %10.3f %10.3f %10.5f\n", row.variant.c_str(), static_cast<long long>(row.params),
                  row.train_psnr, row.bicubic_psnr, row.final_loss);
    return 0;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dlgsa::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const dlgsa::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const dlgsa::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitIo;
  } catch (const dlgsa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
