// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/sparsegsa.hpp"

#include <algorithm>
#include <cmath>

namespace dlgsa {

template <typename T>
SparseGsaParams<T> SparseGsaParams<T>::make(ParamStore<T>& store, const std::string& name,
                                            const SparseGsaConfig& cfg) {
  if (cfg.channels < 1 || cfg.heads < 1 || cfg.channels % cfg.heads != 0) {
    throw ConfigError("heads: channels " + std::to_string(cfg.channels) + " not divisible by heads " +
                      std::to_string(cfg.heads));
  }
  SparseGsaParams p;
  p.cfg = cfg;
  p.norm = LayerNorm<T>::make(store, name + ".norm", cfg.channels);
  p.qkv = Conv2d<T>::make(store, name + ".qkv", cfg.channels, 3 * cfg.channels, 1, Init::kTruncNormal);
  p.qkv_spatial =
      DepthwiseConv2d<T>::make(store, name + ".qkv_spatial", 3 * cfg.channels, 3, Init::kFanInUniform, cfg.pad_mode);
  p.log_alpha = store.add(name + ".log_alpha", Shape{1, cfg.heads, 1, 1}, Init::kZeros);
  p.proj_out = Conv2d<T>::make(store, name + ".proj_out", cfg.channels, cfg.channels, 1, Init::kZeros);
  p.ffn = GatedFfn<T>::make(store, name + ".ffn", cfg.channels, cfg.ffn_ratio, cfg.pad_mode);
  return p;
}

template <typename T>
Qkv<T> qkv_project(const Tensor<T>& x_normed, const SparseGsaParams<T>& p) {
  const Tensor<T> u = p.qkv_spatial(p.qkv(x_normed));
  const std::int64_t c = p.cfg.channels;
  return {slice_channels(u, 0, c), slice_channels(u, c, c), slice_channels(u, 2 * c, c)};
}

template <typename T>
AttentionResult<T> channel_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                     const Tensor<T>& log_alpha, std::int64_t heads, AttentionGate gate,
                                     bool normalize_qk) {
  const Shape s = q.shape();
  if (!(k.shape() == s) || !(v.shape() == s)) throw DimensionError("channel_attention: q, k, v shapes differ");
  if (heads < 1 || s.c % heads != 0) {
    throw ConfigError("heads: channels " + std::to_string(s.c) + " not divisible by heads " + std::to_string(heads));
  }
  if (log_alpha.numel() != heads) throw DimensionError("channel_attention: need one alpha per head");
  const Shape hs{s.n, heads, s.c / heads, s.h * s.w};
  Tensor<T> qh = reshape(q, hs);
  Tensor<T> kh = reshape(k, hs);
  const Tensor<T> vh = reshape(v, hs);
  if (normalize_qk) {
    qh = l2_normalize_lastdim(qh);
    kh = l2_normalize_lastdim(kh);
  }
  const Tensor<T> inv_alpha = exp(scale(log_alpha, T(-1)));
  const Tensor<T> logits = channel_scale(matmul(qh, kh, false, true), inv_alpha);
  const Tensor<T> attn = gate == AttentionGate::kRelu ? relu(logits) : softmax_lastdim(logits);
  return {reshape(matmul(attn, vh), s), attn};
}

template <typename T>
Tensor<T> sparsegsa_block(const Tensor<T>& x, const SparseGsaParams<T>& p, Tensor<T>* attn_out) {
  const Qkv<T> qkv = qkv_project(p.norm(x), p);
  AttentionResult<T> r =
      channel_attention(qkv.q, qkv.k, qkv.v, p.log_alpha, p.cfg.heads, p.cfg.gate, p.cfg.normalize_qk);
  if (attn_out != nullptr) *attn_out = r.attn;
  return gated_ffn(add(x, p.proj_out(r.out)), p.ffn);
}

std::vector<std::int64_t> tile_starts(std::int64_t size, std::int64_t win) {
  if (win <= 0) throw ConfigError("TLC window must be > 0");
  if (size <= win) return {0};
  std::vector<std::int64_t> starts;
  for (std::int64_t s = 0; s + win <= size; s += win) starts.push_back(s);
  if (starts.back() + win < size) starts.push_back(size - win);
  return starts;
}

namespace {

template <typename T>
Tensor<T> crop_tile(const Tensor<T>& x, std::int64_t y0, std::int64_t x0, std::int64_t th, std::int64_t tw) {
  const Shape s = x.shape();
  Tensor<T> t(Shape{s.n, s.c, th, tw});
  auto d = t.mutable_data();
  for (std::int64_t p = 0; p < s.n * s.c; ++p)
    for (std::int64_t y = 0; y < th; ++y)
      std::copy_n(x.data().data() + (p * s.h + y0 + y) * s.w + x0, tw, d.data() + (p * th + y) * tw);
  return t;
}

}  // namespace

template <typename T>
Tensor<T> tlc_windowed(const Tensor<T>& x, const SparseGsaParams<T>& p, int win) {
  if (win <= 0) throw ConfigError("TLC window must be > 0");
  NoGradGuard no_grad;
  const Shape s = x.shape();
  const auto ys = tile_starts(s.h, win);
  const auto xs = tile_starts(s.w, win);
  if (ys.size() == 1 && xs.size() == 1) return sparsegsa_block(x, p);
  const std::int64_t th = std::min<std::int64_t>(win, s.h), tw = std::min<std::int64_t>(win, s.w);
  std::vector<T> acc(static_cast<std::size_t>(s.numel()), T(0));
  std::vector<T> count(static_cast<std::size_t>(s.plane()), T(0));
  for (std::int64_t y0 : ys)
    for (std::int64_t x0 : xs) {
      const Tensor<T> out = sparsegsa_block(crop_tile(x, y0, x0, th, tw), p);
      auto od = out.data();
      for (std::int64_t pl = 0; pl < s.n * s.c; ++pl)
        for (std::int64_t y = 0; y < th; ++y)
          for (std::int64_t xx = 0; xx < tw; ++xx)
            acc[(pl * s.h + y0 + y) * s.w + x0 + xx] += od[(pl * th + y) * tw + xx];
      for (std::int64_t y = 0; y < th; ++y)
        for (std::int64_t xx = 0; xx < tw; ++xx) count[(y0 + y) * s.w + x0 + xx] += T(1);
    }
  for (std::int64_t pl = 0; pl < s.n * s.c; ++pl)
    for (std::int64_t i = 0; i < s.plane(); ++i) acc[pl * s.plane() + i] /= count[i];
  return Tensor<T>(s, std::move(acc));
}

template <typename T>
WindowAttentionParams<T> WindowAttentionParams<T>::make(ParamStore<T>& store, const std::string& name,
                                                        const WindowAttentionConfig& cfg) {
  if (cfg.channels < 1 || cfg.heads < 1 || cfg.channels % cfg.heads != 0) {
    throw ConfigError("heads: channels not divisible by heads");
  }
  if (cfg.window < 1) throw ConfigError("window must be >= 1");
  WindowAttentionParams p;
  p.cfg = cfg;
  p.norm = LayerNorm<T>::make(store, name + ".norm", cfg.channels);
  p.qkv = Conv2d<T>::make(store, name + ".qkv", cfg.channels, 3 * cfg.channels, 1, Init::kTruncNormal);
  p.proj_out = Conv2d<T>::make(store, name + ".proj_out", cfg.channels, cfg.channels, 1, Init::kZeros);
  p.ffn = GatedFfn<T>::make(store, name + ".ffn", cfg.channels, cfg.ffn_ratio);
  return p;
}

template <typename T>
Tensor<T> window_attention_block(const Tensor<T>& x, const WindowAttentionParams<T>& p) {
  const Shape s = x.shape();
  const int win = p.cfg.window;
  if (s.h % win != 0 || s.w % win != 0) {
    throw DimensionError("window attention: " + s.str() + " is not a multiple of window " + std::to_string(win));
  }
  const std::int64_t c = s.c, heads = p.cfg.heads, d = c / heads;
  const Tensor<T> windows = window_partition(p.qkv(p.norm(x)), win);
  const std::int64_t nw = windows.shape().n;
  const Shape hs{nw, heads, d, std::int64_t(win) * win};
  const Tensor<T> q = reshape(slice_channels(windows, 0, c), hs);
  const Tensor<T> k = reshape(slice_channels(windows, c, c), hs);
  const Tensor<T> v = reshape(slice_channels(windows, 2 * c, c), hs);
  const Tensor<T> attn = softmax_lastdim(scale(matmul(q, k, true, false), T(1) / std::sqrt(T(d))));
  const Tensor<T> mixed = reshape(matmul(v, attn, false, true), Shape{nw, c, win, win});
  return gated_ffn(add(x, p.proj_out(window_merge(mixed, s.h, s.w))), p.ffn);
}

#define DLGSA_INSTANTIATE_GSA(T)                                                                        \
  template struct SparseGsaParams<T>;                                                                   \
  template struct WindowAttentionParams<T>;                                                             \
  template Qkv<T> qkv_project(const Tensor<T>&, const SparseGsaParams<T>&);                             \
  template AttentionResult<T> channel_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                                const Tensor<T>&, std::int64_t, AttentionGate, bool);   \
  template Tensor<T> sparsegsa_block(const Tensor<T>&, const SparseGsaParams<T>&, Tensor<T>*);          \
  template Tensor<T> tlc_windowed(const Tensor<T>&, const SparseGsaParams<T>&, int);                    \
  template Tensor<T> window_attention_block(const Tensor<T>&, const WindowAttentionParams<T>&);

DLGSA_INSTANTIATE_GSA(float)
DLGSA_INSTANTIATE_GSA(double)

}  // namespace dlgsa
