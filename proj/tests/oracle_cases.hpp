// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Random small instances of the core operators compared against the
// brute-force loops in oracles.hpp. Each function returns the largest
// absolute difference seen over `count` instances.

#pragma once

#include <cstdint>
#include <random>

#include "dlgsa/image.hpp"
#include "dlgsa/mhdlsa.hpp"
#include "dlgsa/sparsegsa.hpp"
#include "oracles.hpp"

namespace oracle {

template <typename T>
void fill(dlgsa::Tensor<T>& t, const Vec& v) {
  auto d = t.mutable_data();
  for (std::size_t i = 0; i < v.size(); ++i) d[i] = T(v[i]);
}

/// Values rounded to T so the oracle sees exactly what the library sees.
template <typename T>
Vec draw(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  Vec v = uniform(rng, n, lo, hi);
  for (double& x : v) x = double(T(x));
  return v;
}

template <typename T>
double aggregate_cases(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const int n = pick(1, 2), heads = pick(1, 3), c = heads * pick(1, 3), h = pick(1, 7), w = pick(1, 7);
    const int k = 2 * pick(0, 2) + 1;
    const Vec field = draw<T>(rng, std::size_t(n) * heads * k * k * h * w, -1, 1);
    const Vec feat = draw<T>(rng, std::size_t(n) * c * h * w, -1, 1);
    const auto got = dlgsa::dynamic_local_aggregate(tensor<T>({n, heads * k * k, h, w}, field),
                                                    tensor<T>({n, c, h, w}, feat), heads, k);
    worst = std::max(worst, max_abs_diff(dynamic_aggregate(field, feat, n, c, h, w, heads, k), got));
  }
  return worst;
}

template <typename T>
double attention_cases(std::uint64_t seed, int count, bool softmax) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const int n = pick(1, 2), heads = pick(1, 3), c = heads * pick(1, 4), h = pick(1, 6), w = pick(1, 6);
    const bool normalize = i % 2 == 1;
    const std::size_t sz = std::size_t(n) * c * h * w;
    const Vec q = draw<T>(rng, sz, -0.5, 0.5), k = draw<T>(rng, sz, -0.5, 0.5), v = draw<T>(rng, sz, -1, 1);
    const Vec log_alpha = draw<T>(rng, heads, -0.5, 0.5);
    Vec alpha(heads);
    for (int g = 0; g < heads; ++g) alpha[g] = std::exp(log_alpha[g]);
    const dlgsa::Shape s{n, c, h, w};
    const auto la = tensor<T>({1, heads, 1, 1}, log_alpha);
    const auto got = softmax ? dlgsa::softmax_channel_attention(tensor<T>(s, q), tensor<T>(s, k), tensor<T>(s, v),
                                                                la, heads, normalize)
                             : dlgsa::sparse_channel_attention(tensor<T>(s, q), tensor<T>(s, k), tensor<T>(s, v),
                                                               la, heads, normalize);
    Vec attn;
    const Vec want = channel_attention(q, k, v, alpha, n, c, h, w, heads, softmax, normalize, &attn);
    worst = std::max({worst, max_abs_diff(want, got.out), max_abs_diff(attn, got.attn)});
  }
  return worst;
}

template <typename T>
double gated_ffn_cases(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const double ratios[] = {1.0, 2.0, 2.66};
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const int n = pick(1, 2), c = pick(1, 6), h = pick(1, 6), w = pick(1, 6);
    dlgsa::ParamStore<T> store(seed + i);
    auto ffn = dlgsa::GatedFfn<T>::make(store, "ffn", c, ratios[pick(0, 2)]);
    FfnWeights f;
    f.hidden = int(ffn.hidden);
    const std::size_t e2 = 2 * std::size_t(f.hidden);
    f.gain = draw<T>(rng, c, 0.5, 1.5);
    f.offset = draw<T>(rng, c, -0.5, 0.5);
    f.w_in = draw<T>(rng, e2 * c, -0.5, 0.5);
    f.b_in = draw<T>(rng, e2, -0.5, 0.5);
    f.w_dw = draw<T>(rng, e2 * 9, -0.5, 0.5);
    f.b_dw = draw<T>(rng, e2, -0.5, 0.5);
    f.w_out = draw<T>(rng, std::size_t(c) * f.hidden, -0.5, 0.5);
    f.b_out = draw<T>(rng, c, -0.5, 0.5);
    fill(ffn.norm.gain, f.gain);
    fill(ffn.norm.offset, f.offset);
    fill(ffn.proj_in.weight, f.w_in);
    fill(ffn.proj_in.bias, f.b_in);
    fill(ffn.spatial.weight, f.w_dw);
    fill(ffn.spatial.bias, f.b_dw);
    fill(ffn.proj_out.weight, f.w_out);
    fill(ffn.proj_out.bias, f.b_out);
    const Vec x = draw<T>(rng, std::size_t(n) * c * h * w, -2, 2);
    const auto got = dlgsa::gated_ffn(tensor<T>({n, c, h, w}, x), ffn);
    worst = std::max(worst, max_abs_diff(gated_ffn(x, n, c, h, w, f), got));
  }
  return worst;
}

template <typename T>
double generator_cases(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    dlgsa::MhdlsaConfig cfg;
    cfg.heads = pick(1, 2);
    cfg.channels = cfg.heads * 2 * pick(1, 2);
    cfg.k = 2 * pick(0, 2) + 1;
    cfg.gamma = 0.5;
    const int n = pick(1, 2), c = int(cfg.channels), h = pick(1, 8), w = pick(1, 8);
    dlgsa::ParamStore<T> store(seed + i);
    auto p = dlgsa::MhdlsaParams<T>::make(store, "b", cfg);
    GeneratorWeights g;
    g.squeezed = c / 2;
    g.taps = int(cfg.heads) * cfg.k * cfg.k;
    g.w_sq = draw<T>(rng, std::size_t(g.squeezed) * c, -0.5, 0.5);
    g.b_sq = draw<T>(rng, g.squeezed, -0.5, 0.5);
    g.w_sp = draw<T>(rng, std::size_t(g.squeezed) * 49, -0.3, 0.3);
    g.b_sp = draw<T>(rng, g.squeezed, -0.5, 0.5);
    g.w_ex = draw<T>(rng, std::size_t(g.taps) * g.squeezed, -0.5, 0.5);
    g.b_ex = draw<T>(rng, g.taps, -0.5, 0.5);
    fill(p.gen_squeeze.weight, g.w_sq);
    fill(p.gen_squeeze.bias, g.b_sq);
    fill(p.gen_spatial.weight, g.w_sp);
    fill(p.gen_spatial.bias, g.b_sp);
    fill(p.gen_expand.weight, g.w_ex);
    fill(p.gen_expand.bias, g.b_ex);
    const Vec y = draw<T>(rng, std::size_t(n) * c * h * w, -1, 1);
    const auto got = dlgsa::generate_dynamic_weights(tensor<T>({n, c, h, w}, y), p);
    worst = std::max(worst, max_abs_diff(generator(y, n, c, h, w, g), got));
  }
  return worst;
}

/// Samples in [0, 1]; up- and downscaling with independent factors per axis.
template <typename T>
double bicubic_cases(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const int n = pick(1, 2), c = pick(1, 3), h = pick(1, 9), w = pick(1, 9), oh = pick(1, 12), ow = pick(1, 12);
    const Vec in = draw<T>(rng, std::size_t(n) * c * h * w, 0, 1);
    const auto got = dlgsa::bicubic_resize(tensor<T>({n, c, h, w}, in), ow, oh);
    Vec want;
    for (int p = 0; p < n * c; ++p) {
      const Vec plane(in.begin() + std::size_t(p) * h * w, in.begin() + std::size_t(p + 1) * h * w);
      const Vec o = bicubic(plane, w, h, ow, oh);
      want.insert(want.end(), o.begin(), o.end());
    }
    worst = std::max(worst, max_abs_diff(want, got));
  }
  return worst;
}

}  // namespace oracle
