// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Loss, optimizer, schedule, the training loop, checkpoints, evaluation and
// the ablation harness.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlgsa/image.hpp"
#include "dlgsa/network.hpp"

namespace dlgsa {

/// mean(|pred - target|). The gradient at exact ties is 0.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update at step t >= 1.
template <typename T>
void adam_step(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v, std::int64_t t,
               double lr, const AdamOptions& opt = {});

/// lr0 * factor^(number of milestones <= iter). Milestones must increase.
double lr_multistep(std::int64_t iter, double lr0, const std::vector<std::int64_t>& milestones, double factor);

/// Milestones at 50%, 75% and 90% of the run.
std::vector<std::int64_t> default_milestones(std::int64_t total_iters);

enum class DatasetKind { kSynthetic, kDirectory };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kSynthetic;
  std::uint64_t seed = 0;  // synthetic: image j uses seed + j and family j mod 4
  int count = 8;
  int size = 256;
  std::string path;  // directory: <path>/HR/*.ppm
};

struct TrainConfig {
  ModelConfig model = model_preset("full", 4);
  int batch = 16;
  int patch = 48;  // LR side
  double lr0 = 5e-4;
  std::vector<std::int64_t> milestones;  // empty: default_milestones(total_iters)
  double lr_decay = 0.5;
  std::int64_t total_iters = 500000;
  std::uint64_t seed = 0;
  std::string loss = "l1";
  DatasetSpec dataset;
  std::int64_t eval_interval = 0;  // 0 disables periodic evaluation
  std::int64_t log_interval = 100;
  bool tlc = false;
  int tlc_window = 0;  // 0: the training patch size
  bool augment = true;

  std::vector<std::int64_t> effective_milestones() const;
  void validate() const;
};

/// The frozen desk-scale benchmark: tiny model at x2 on eight 64x64
/// synthetic images, batch 8, LR patch 16, 2000 iterations, no augmentation.
TrainConfig overfit_benchmark_config();

struct Dataset {
  std::vector<ImageRGB8> images;
  std::vector<std::string> names;
};

/// Throws IoError when a directory dataset is missing or empty.
Dataset load_dataset(const DatasetSpec& spec);

/// Crops an image so both sides are multiples of `scale`.
ImageRGB8 modcrop(const ImageRGB8& img, int scale);

/// Applies one of the 8 flip/rotate symmetries to every plane.
TensorF dihedral(const TensorF& x, int which);

struct ImageScore {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
  double bicubic_psnr = 0.0;
  double bicubic_ssim = 0.0;
  std::string error;  // non-empty when the image could not be scored
};

struct EvalResult {
  std::vector<ImageScore> images;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_bicubic_psnr = 0.0;
  double mean_bicubic_ssim = 0.0;
};

/// HR -> bicubic LR -> model (tiled when tlc_window > 0) -> clamp/round ->
/// Y-channel PSNR (crop = scale) and SSIM. Also scores bicubic upscaling.
template <typename T>
EvalResult evaluate(const DlgsaNet<T>& net, const std::vector<ImageRGB8>& hr_images, int tlc_window = 0,
                    const std::vector<std::string>& names = {});

template <typename T>
struct Checkpoint {
  TrainConfig config;
  std::int64_t iteration = 0;
  std::uint64_t rng_state = 0;
  std::map<std::string, Tensor<T>> params;
  std::map<std::string, Tensor<T>> adam_m;
  std::map<std::string, Tensor<T>> adam_v;
};

template <typename T>
void save_checkpoint(const std::string& path, const Checkpoint<T>& ck);
template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<T>& ck);
template <typename T>
Checkpoint<T> decode_checkpoint(const std::vector<std::uint8_t>& bytes);
template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path);

/// Copies checkpoint weights into a model built from the checkpoint config.
template <typename T>
DlgsaNet<T> model_from_checkpoint(const Checkpoint<T>& ck);

template <typename T>
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, std::vector<ImageRGB8> hr_images);

  /// One optimization step; returns the loss before the update.
  double step();
  std::int64_t iteration() const noexcept { return iter_; }
  const DlgsaNet<T>& model() const noexcept { return net_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  const std::vector<ImageRGB8>& images() const noexcept { return images_; }

  Checkpoint<T> checkpoint() const;
  void restore(const Checkpoint<T>& ck);

  /// Draws the next (LR, HR) batch, advancing the sampling RNG.
  std::pair<Tensor<T>, Tensor<T>> sample_batch();

 private:
  TrainConfig cfg_;
  std::vector<ImageRGB8> images_;
  std::vector<TensorF> hr_;
  DlgsaNet<T> net_;
  std::vector<Tensor<T>> m_, v_;
  Rng rng_;
  std::int64_t iter_ = 0;
};

/// Names the first stage of the network whose output is not finite for the
/// given input, or returns "" if everything is finite.
template <typename T>
std::string first_nonfinite_stage(const DlgsaNet<T>& net, const Tensor<T>& lr);

struct TrainLog {
  std::vector<double> losses;  // one per iteration
  std::vector<std::pair<std::int64_t, EvalResult>> evals;
};

/// Runs the configured number of iterations from the trainer's current
/// state. `progress` (optional) receives log lines.
template <typename T>
TrainLog run_training(Trainer<T>& trainer, std::ostream* progress = nullptr);

struct AblationRow {
  std::string variant;
  double train_psnr = 0.0;
  double bicubic_psnr = 0.0;
  double final_loss = 0.0;
  std::int64_t params = 0;
};

/// suite: "hdtb" (hybrid, local_only, global_only), "attention" (relu,
/// softmax) or "local" (mhdlsa, mhsa). Every variant trains from the same
/// seed on the same data.
std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const std::string& suite,
                                                                   const TrainConfig& base);

/// Trains one variant from scratch and scores it on its training images.
AblationRow run_ablation_variant(const std::string& name, const TrainConfig& cfg, const Dataset& data,
                                 std::ostream* progress = nullptr);

std::vector<AblationRow> run_ablation(const std::string& suite, const TrainConfig& base,
                                      std::ostream* progress = nullptr);

}  // namespace dlgsa
