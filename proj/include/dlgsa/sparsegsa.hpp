// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Sparse global self-attention: transposed (channel x channel) attention per
// head, gated by ReLU, plus the tiled test-time variant. Also hosts the
// windowed spatial softmax attention used as the local-mechanism baseline.

#pragma once

#include <cstdint>
#include <string>

#include "dlgsa/mhdlsa.hpp"

namespace dlgsa {

enum class AttentionGate { kRelu, kSoftmax };

struct SparseGsaConfig {
  std::int64_t channels = 90;
  std::int64_t heads = 6;
  double ffn_ratio = 2.66;
  AttentionGate gate = AttentionGate::kRelu;
  /// L2-normalize each query/key row over the pixels before the product.
  bool normalize_qk = true;
  PadMode pad_mode = PadMode::kZero;
};

template <typename T>
struct SparseGsaParams {
  SparseGsaConfig cfg;
  LayerNorm<T> norm;
  Conv2d<T> qkv;                  // 1x1, c -> 3c
  DepthwiseConv2d<T> qkv_spatial; // 3x3 on 3c
  Tensor<T> log_alpha;            // [1, heads, 1, 1]; alpha = exp(log_alpha)
  Conv2d<T> proj_out;             // 1x1, c -> c, zero-initialized
  GatedFfn<T> ffn;

  static SparseGsaParams make(ParamStore<T>& store, const std::string& name, const SparseGsaConfig& cfg);
};

template <typename T>
struct Qkv {
  Tensor<T> q, k, v;
};

/// Fused 1x1 then depthwise 3x3, split into thirds in the order Q, K, V.
template <typename T>
Qkv<T> qkv_project(const Tensor<T>& x_normed, const SparseGsaParams<T>& p);

template <typename T>
struct AttentionResult {
  Tensor<T> out;   // [n, c, h, w]
  Tensor<T> attn;  // [n, heads, c/heads, c/heads]
};

/// Per head, with q, k, v viewed as (c/heads) x (h w) matrices:
///   A = gate(q k^T / alpha),  out = A v.
/// `normalize_qk` divides every row of q and k by its L2 norm first.
template <typename T>
AttentionResult<T> channel_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                     const Tensor<T>& log_alpha, std::int64_t heads, AttentionGate gate,
                                     bool normalize_qk);

template <typename T>
AttentionResult<T> sparse_channel_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                            const Tensor<T>& log_alpha, std::int64_t heads,
                                            bool normalize_qk = false) {
  return channel_attention(q, k, v, log_alpha, heads, AttentionGate::kRelu, normalize_qk);
}

template <typename T>
AttentionResult<T> softmax_channel_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                             const Tensor<T>& log_alpha, std::int64_t heads,
                                             bool normalize_qk = false) {
  return channel_attention(q, k, v, log_alpha, heads, AttentionGate::kSoftmax, normalize_qk);
}

/// Optionally reports the attention matrix through `attn_out`.
template <typename T>
Tensor<T> sparsegsa_block(const Tensor<T>& x, const SparseGsaParams<T>& p, Tensor<T>* attn_out = nullptr);

/// Start offsets of win-sized tiles covering [0, size). The last tile is
/// anchored to the far border; one shrunken tile when size <= win.
std::vector<std::int64_t> tile_starts(std::int64_t size, std::int64_t win);

/// Inference-only tiled evaluation of the block: every tile is processed as
/// an independent image and overlapping outputs are averaged.
template <typename T>
Tensor<T> tlc_windowed(const Tensor<T>& x, const SparseGsaParams<T>& p, int win);

struct WindowAttentionConfig {
  std::int64_t channels = 90;
  std::int64_t heads = 6;
  int window = 8;
  double ffn_ratio = 2.66;
};

template <typename T>
struct WindowAttentionParams {
  WindowAttentionConfig cfg;
  LayerNorm<T> norm;
  Conv2d<T> qkv;       // 1x1, c -> 3c
  Conv2d<T> proj_out;  // 1x1, zero-initialized
  GatedFfn<T> ffn;

  static WindowAttentionParams make(ParamStore<T>& store, const std::string& name,
                                    const WindowAttentionConfig& cfg);
};

/// Softmax attention among the pixels of each non-overlapping window,
/// scaled by 1/sqrt(c/heads). h and w must be multiples of the window.
template <typename T>
Tensor<T> window_attention_block(const Tensor<T>& x, const WindowAttentionParams<T>& p);

}  // namespace dlgsa
