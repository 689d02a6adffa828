// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "doctest.h"
#include "dlgsa/train.hpp"

using namespace dlgsa;

namespace {

TrainConfig small_run() {
  TrainConfig c;
  c.model = model_preset("tiny", 2);
  c.model.num_groups = 1;
  c.model.blocks_per_group = 2;
  c.model.channels = 12;
  c.model.heads = 2;
  c.model.ffn_ratio = 2.0;
  c.batch = 2;
  c.patch = 8;
  c.total_iters = 6;
  c.dataset = DatasetSpec{DatasetKind::kSynthetic, 3, 3, 32, ""};
  c.log_interval = 0;
  return c;
}

template <typename T>
std::vector<T> flat(const Trainer<T>& t) {
  std::vector<T> out;
  for (const auto& [name, p] : t.model().store.items()) out.insert(out.end(), p.data().begin(), p.data().end());
  return out;
}

}  // namespace

TEST_CASE("l1 loss") {
  auto a = TensorD({1, 1, 2, 2}, {1, 2, 3, 4}, true);
  CHECK(l1_loss(a, a.detach()).item() == 0.0);
  auto b = TensorD({1, 1, 2, 2}, {0, 1, 2, 3});
  CHECK(l1_loss(a, b).item() == 1.0);
  auto c = TensorD({1, 1, 2, 2}, {2, 1, 3, 5});
  l1_loss(a, c).backward();
  const std::vector<double> want{-0.25, 0.25, 0.0, -0.25};
  for (int i = 0; i < 4; ++i) CHECK(a.grad()[i] == want[i]);
}

TEST_CASE("adam") {
  std::vector<double> p{1.0, -2.0}, g{0.3, -4.0}, m(2, 0.0), v(2, 0.0);
  adam_step<double>(p, g, m, v, 1, 0.01);
  CHECK(p[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.01));

  std::vector<double> zero(2, 0.0), m0 = m;
  adam_step<double>(p, zero, m, v, 2, 0.01);
  CHECK(std::fabs(m[0]) < std::fabs(m0[0]));

  std::vector<double> x{1.0}, gm(1, 0.0), gv(1, 0.0);
  for (int t = 1; t <= 100; ++t) {
    std::vector<double> gx{2 * x[0]};
    adam_step<double>(x, gx, gm, gv, t, 0.1);
  }
  CHECK(std::fabs(x[0]) < 0.15);

  std::vector<double> q{5.0}, mq{0.0}, vq{0.0}, gz{0.0};
  adam_step<double>(q, gz, mq, vq, 1, 0.1);
  CHECK(q[0] == 5.0);
}

TEST_CASE("multistep schedule") {
  const std::vector<std::int64_t> ms{10, 20};
  CHECK(lr_multistep(0, 1e-3, ms, 0.5) == 1e-3);
  CHECK(lr_multistep(9, 1e-3, ms, 0.5) == 1e-3);
  CHECK(lr_multistep(25, 1e-3, ms, 0.5) == doctest::Approx(2.5e-4));
  double prev = 1.0;
  for (std::int64_t i = 0; i < 40; ++i) {
    const double lr = lr_multistep(i, 1.0, ms, 0.5);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK(default_milestones(2000) == std::vector<std::int64_t>{1000, 1500, 1800});
  TrainConfig c = small_run();
  c.milestones = {5, 3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("dihedral group") {
  TensorF x({1, 2, 3, 4});
  for (std::int64_t i = 0; i < x.numel(); ++i) x.mutable_data()[i] = float(i);
  for (int w = 0; w < 8; ++w) {
    auto y = dihedral(x, w);
    CHECK(y.numel() == x.numel());
    if (w & 4) CHECK(y.shape() == Shape{1, 2, 4, 3});
  }
  auto back = dihedral(dihedral(x, 4), 4);
  CHECK(std::equal(back.data().begin(), back.data().end(), x.data().begin()));
  auto flip = dihedral(x, 2);
  CHECK(flip.at(0, 1, 2, 0) == x.at(0, 1, 2, 3));
}

TEST_CASE("modcrop and datasets") {
  auto img = synth_image(1, 13, 10, SynthFamily::kBlobs);
  auto c = modcrop(img, 3);
  CHECK(c.width == 12);
  CHECK(c.height == 9);
  auto d = load_dataset(DatasetSpec{DatasetKind::kSynthetic, 5, 5, 16, ""});
  CHECK(d.images.size() == 5);
  CHECK(d.names[4] == "synth4_stripes");
  CHECK_THROWS_AS(load_dataset(DatasetSpec{DatasetKind::kDirectory, 0, 0, 0, "/nonexistent/dir"}), IoError);
}

TEST_CASE("training is deterministic") {
  auto cfg = small_run();
  auto data = load_dataset(cfg.dataset).images;
  Trainer<double> a(cfg, data), b(cfg, data);
  auto la = run_training(a), lb = run_training(b);
  CHECK(la.losses.size() == 6);
  CHECK(la.losses == lb.losses);
  CHECK(flat(a) == flat(b));
}

TEST_CASE("loss decreases on a tiny overfit run") {
  auto cfg = small_run();
  cfg.total_iters = 60;
  cfg.batch = 1;
  cfg.dataset.count = 1;
  Trainer<float> t(cfg, load_dataset(cfg.dataset).images);
  auto log = run_training(t);
  double head = 0, tail = 0;
  for (int i = 0; i < 5; ++i) {
    head += log.losses[i];
    tail += log.losses[log.losses.size() - 1 - i];
  }
  CHECK(tail < head);
}

TEST_CASE("checkpoint round trip resumes bit for bit") {
  auto cfg = small_run();
  auto data = load_dataset(cfg.dataset).images;
  Trainer<double> a(cfg, data);
  for (int i = 0; i < 3; ++i) a.step();
  const auto path = (std::filesystem::temp_directory_path() / "dlgsa_unit_ckpt.bin").string();
  save_checkpoint(path, a.checkpoint());
  auto loaded = load_checkpoint<double>(path);
  std::filesystem::remove(path);
  CHECK(encode_checkpoint(loaded) == encode_checkpoint(a.checkpoint()));

  Trainer<double> b(cfg, data);
  b.restore(loaded);
  CHECK(b.iteration() == 3);
  const double la = a.step(), lb = b.step();
  CHECK(la == lb);
  CHECK(flat(a) == flat(b));

  auto bytes = encode_checkpoint(a.checkpoint());
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_checkpoint<double>(bytes), ParseError);

  auto other = cfg;
  other.model.channels = 16;
  Trainer<double> c(other, data);
  CHECK_THROWS_AS(c.restore(loaded), ConfigError);
  auto net = model_from_checkpoint(loaded);
  CHECK(net.store.total_elements() == a.model().store.total_elements());
}

TEST_CASE("augmentation leaves the mean patch loss unchanged") {
  auto cfg = small_run();
  cfg.batch = 1;
  auto data = load_dataset(DatasetSpec{DatasetKind::kSynthetic, 7, 8, 32, ""}).images;
  auto mean_loss = [&](bool augment) {
    auto c = cfg;
    c.augment = augment;
    Trainer<float> t(c, data);
    NoGradGuard no_grad;
    double s = 0;
    for (int i = 0; i < 1000; ++i) {
      auto [lr, hr] = t.sample_batch();
      s += l1_loss(model_forward(lr, t.model()), hr).item();
    }
    return s / 1000;
  };
  const double plain = mean_loss(false), aug = mean_loss(true);
  MESSAGE("mean loss " << plain << " plain, " << aug << " augmented");
  CHECK(std::fabs(aug - plain) < 0.1 * plain);
}

TEST_CASE("evaluation") {
  auto cfg = small_run();
  auto net = build_model<float>(cfg.model, 0);
  auto imgs = load_dataset(DatasetSpec{DatasetKind::kSynthetic, 0, 2, 32, ""}).images;
  imgs.push_back(ImageRGB8(1, 1));
  auto r = evaluate(net, imgs);
  REQUIRE(r.images.size() == 3);
  CHECK(r.images[2].error.size() > 0);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::isfinite(r.images[i].bicubic_psnr));
    CHECK(r.images[i].bicubic_psnr > 20.0);
  }
  auto exact = load_dataset(DatasetSpec{DatasetKind::kSynthetic, 1, 2, 16, ""}).images;
  auto tiled = evaluate(net, exact, 8), global = evaluate(net, exact, 0);
  for (int i = 0; i < 2; ++i) CHECK(tiled.images[i].psnr == global.images[i].psnr);
}

TEST_CASE("ablation harness runs every variant") {
  auto cfg = small_run();
  cfg.total_iters = 2;
  auto rows = run_ablation("attention", cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].variant != rows[1].variant);
  CHECK_THROWS(run_ablation("nonsense", cfg));
}
