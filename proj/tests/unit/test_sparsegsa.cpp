// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "dlgsa/sparsegsa.hpp"
#include "oracle_cases.hpp"

using namespace dlgsa;

namespace {

TensorD randn(Shape s, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> v(s.numel());
  for (double& x : v) x = d(rng);
  return TensorD(s, std::move(v));
}

double max_diff(const TensorD& a, const TensorD& b) {
  if (!(a.shape() == b.shape())) return INFINITY;
  double m = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

void randomize(ParamStore<double>& store, std::uint64_t seed, double sigma = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  for (auto& [name, t] : store.items()) {
    auto p = t;
    for (double& v : p.mutable_data()) v += d(rng);
  }
}

SparseGsaConfig small_cfg() {
  SparseGsaConfig c;
  c.channels = 6;
  c.heads = 2;
  c.ffn_ratio = 2.0;
  return c;
}

TensorD crop(const TensorD& x, std::int64_t y0, std::int64_t x0, std::int64_t th, std::int64_t tw) {
  const Shape s = x.shape();
  TensorD t({s.n, s.c, th, tw});
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < th; ++y)
        for (std::int64_t xx = 0; xx < tw; ++xx)
          t.mutable_data()[((n * s.c + c) * th + y) * tw + xx] = x.at(n, c, y0 + y, x0 + xx);
  return t;
}

}  // namespace

TEST_CASE("qkv projection") {
  ParamStore<double> store(1);
  auto p = SparseGsaParams<double>::make(store, "g", small_cfg());
  for (auto* t : {&p.qkv.weight, &p.qkv.bias, &p.qkv_spatial.weight, &p.qkv_spatial.bias})
    for (double& v : t->mutable_data()) v = 0.0;
  auto x = randn({1, 6, 4, 5}, 2);
  auto z = qkv_project(x, p);
  for (auto* t : {&z.q, &z.k, &z.v}) {
    CHECK(t->shape() == x.shape());
    for (double v : t->data()) CHECK(v == 0.0);
  }

  randomize(store, 3);
  auto r = qkv_project(x, p);
  auto fused = depthwise_conv2d(conv2d(x, p.qkv.weight, p.qkv.bias), p.qkv_spatial.weight, p.qkv_spatial.bias);
  CHECK(max_diff(r.q, slice_channels(fused, 0, 6)) < 1e-6);
  CHECK(max_diff(r.k, slice_channels(fused, 6, 6)) < 1e-6);
  CHECK(max_diff(r.v, slice_channels(fused, 12, 6)) < 1e-6);
}

TEST_CASE("relu attention examples") {
  auto k = TensorD::full({1, 2, 2, 2}, 0.7);
  auto q = scale(k, -1.0);
  auto v = randn({1, 2, 2, 2}, 4);
  auto la = TensorD::full({1, 1, 1, 1}, 0.0);
  auto r = sparse_channel_attention(q, k, v, la, 1);
  for (double a : r.out.data()) CHECK(a == 0.0);
  for (double a : r.attn.data()) CHECK(a == 0.0);

  auto one = TensorD::scalar(1.0);
  CHECK(sparse_channel_attention(one, one, TensorD::scalar(-3.5), la, 1).out.item() == -3.5);

  auto qp = TensorD::full({1, 4, 3, 3}, 0.4), kp = randn({1, 4, 3, 3}, 5);
  for (double& x : kp.mutable_data()) x = std::fabs(x);
  auto vp = randn({1, 4, 3, 3}, 6);
  auto la2 = TensorD::full({1, 2, 1, 1}, 0.3);
  auto gated = sparse_channel_attention(qp, kp, vp, la2, 2);
  TensorD lin({1, 4, 3, 3});
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 2; ++i)
      for (int p = 0; p < 9; ++p) {
        double acc = 0;
        for (int j = 0; j < 2; ++j) {
          double dot = 0;
          for (int t = 0; t < 9; ++t) dot += qp.data()[(g * 2 + i) * 9 + t] * kp.data()[(g * 2 + j) * 9 + t];
          acc += dot / std::exp(0.3) * vp.data()[(g * 2 + j) * 9 + p];
        }
        lin.mutable_data()[(g * 2 + i) * 9 + p] = acc;
      }
  CHECK(max_diff(gated.out, lin) < 1e-12);
}

TEST_CASE("softmax attention examples") {
  auto q = TensorD::full({1, 3, 2, 2}, 0.0);
  auto r = softmax_channel_attention(q, randn({1, 3, 2, 2}, 7), randn({1, 3, 2, 2}, 8), TensorD::full({1, 1, 1, 1}, 0.0), 1);
  for (double a : r.attn.data()) CHECK(a == doctest::Approx(1.0 / 3));
  auto s = softmax_channel_attention(randn({2, 6, 3, 3}, 9), randn({2, 6, 3, 3}, 10), randn({2, 6, 3, 3}, 11),
                                     TensorD::full({1, 3, 1, 1}, 0.1), 3);
  for (std::int64_t row = 0; row < 2 * 3 * 2; ++row) {
    double sum = 0;
    for (int j = 0; j < 2; ++j) sum += s.attn.data()[row * 2 + j];
    CHECK(std::fabs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("channel attention against the loop oracle") {
  CHECK(oracle::attention_cases<double>(31, 20, false) < 1e-9);
  CHECK(oracle::attention_cases<double>(32, 20, true) < 1e-9);
  CHECK(oracle::attention_cases<float>(33, 20, false) < 1e-5);
  CHECK(oracle::attention_cases<float>(34, 20, true) < 1e-5);
  CHECK_THROWS_AS(sparse_channel_attention(TensorD({1, 4, 2, 2}), TensorD({1, 4, 2, 2}), TensorD({1, 4, 2, 2}),
                                           TensorD({1, 3, 1, 1}), 2),
                  DimensionError);
}

TEST_CASE("attention properties") {
  auto q = randn({1, 8, 4, 4}, 12), k = randn({1, 8, 4, 4}, 13), v = randn({1, 8, 4, 4}, 14);
  auto la = randn({1, 2, 1, 1}, 15, 0.3);
  auto base = sparse_channel_attention(q, k, v, la, 2);
  auto scaled = sparse_channel_attention(q, k, scale(v, 2.5), la, 2);
  CHECK(max_diff(scaled.out, scale(base.out, 2.5)) < 1e-12);
  for (double alpha_shift : {-2.0, 0.7, 3.0}) {
    auto other = sparse_channel_attention(q, k, v, add(la, TensorD::full({1, 2, 1, 1}, alpha_shift)), 2);
    for (std::int64_t i = 0; i < base.attn.numel(); ++i) CHECK((base.attn.data()[i] > 0) == (other.attn.data()[i] > 0));
  }

  double zeros = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto a = sparse_channel_attention(randn({1, 12, 8, 8}, 100 + seed), randn({1, 12, 8, 8}, 300 + seed),
                                      randn({1, 12, 8, 8}, 500 + seed), TensorD::full({1, 2, 1, 1}, 0.0), 2);
    double z = 0;
    for (double x : a.attn.data()) z += x == 0.0;
    CHECK(z / a.attn.numel() > 0.2);
    CHECK(z / a.attn.numel() < 0.8);
    zeros += z;
    total += double(a.attn.numel());
  }
  MESSAGE("zero fraction over 100 seeds: " << zeros / total);
}

TEST_CASE("sparsegsa block") {
  ParamStore<double> store(16);
  auto p = SparseGsaParams<double>::make(store, "g", small_cfg());
  for (auto [h, w] : {std::pair{5, 3}, std::pair{4, 9}}) {
    auto x = randn({2, 6, h, w}, 17);
    auto y = sparsegsa_block(x, p);
    CHECK(y.shape() == x.shape());
    CHECK(max_diff(y, x) == 0.0);
  }
  randomize(store, 18);
  for (int seed = 0; seed < 100; ++seed) {
    TensorD attn;
    sparsegsa_block(randn({1, 6, 5, 5}, 1000 + seed), p, &attn);
    CHECK(attn.shape() == Shape{1, 2, 3, 3});
    for (double a : attn.data()) REQUIRE(a >= 0.0);
  }
}

TEST_CASE("tile layout") {
  CHECK(tile_starts(96, 48) == std::vector<std::int64_t>{0, 48});
  CHECK(tile_starts(100, 48) == std::vector<std::int64_t>{0, 48, 52});
  CHECK(tile_starts(30, 48) == std::vector<std::int64_t>{0});
  CHECK_THROWS_AS(tile_starts(10, 0), ConfigError);
}

TEST_CASE("tlc") {
  ParamStore<double> store(19);
  auto p = SparseGsaParams<double>::make(store, "g", small_cfg());
  randomize(store, 20);
  auto x = randn({1, 6, 8, 8}, 21);
  CHECK(max_diff(tlc_windowed(x, p, 8), sparsegsa_block(x, p)) == 0.0);

  // Zero padding makes the 3x3 taps see the border, so keep only their centres.
  for (auto& [name, t] : store.items()) {
    if (t.shape().h != 3) continue;
    auto w = t;
    auto d = w.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (i % 9 != 4) d[i] = 0.0;
  }
  auto c = TensorD::full({1, 6, 12, 12}, 0.3);
  auto global = sparsegsa_block(c, p);
  auto tiled = tlc_windowed(c, p, 5);
  CHECK(max_diff(tiled, global) < 1e-12);
  for (std::int64_t i = 1; i < global.numel() / 6; ++i) CHECK(std::fabs(global.data()[i] - global.data()[0]) < 1e-12);

  SparseGsaConfig cfg = small_cfg();
  cfg.channels = 4;
  ParamStore<double> big_store(22);
  auto bp = SparseGsaParams<double>::make(big_store, "g", cfg);
  randomize(big_store, 23);
  auto big = randn({1, 4, 96, 96}, 24);
  auto out = tlc_windowed(big, bp, 48);
  for (std::int64_t y0 : {0, 48})
    for (std::int64_t x0 : {0, 48}) {
      auto tile = crop(big, y0, x0, 48, 48);
      CHECK(max_diff(crop(out, y0, x0, 48, 48), sparsegsa_block(tile, bp)) < 1e-6);
    }
}

TEST_CASE("window attention") {
  WindowAttentionConfig cfg;
  cfg.channels = 6;
  cfg.heads = 2;
  cfg.window = 4;
  cfg.ffn_ratio = 2.0;
  ParamStore<double> store(25);
  auto p = WindowAttentionParams<double>::make(store, "w", cfg);
  auto x = randn({1, 6, 8, 4}, 26);
  CHECK(max_diff(window_attention_block(x, p), x) == 0.0);
  CHECK_THROWS_AS(window_attention_block(randn({1, 6, 6, 4}, 1), p), DimensionError);
}
