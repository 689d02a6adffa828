// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Multi-head dynamic local self-attention and the gated feed-forward network.
//
// A kernel field is stored as a rank-4 tensor [n, heads * k * k, h, w]:
// channel g*k*k + t holds tap t (row-major within the k x k window) of head g.
// Heads own contiguous channel groups of size c / heads.

#pragma once

#include <cstdint>
#include <string>

#include "dlgsa/layers.hpp"

namespace dlgsa {

/// int(c * ratio), the hidden width of the gated FFN.
std::int64_t ffn_hidden_channels(std::int64_t c, double ratio);

/// gamma * c. Throws ConfigError unless it is a positive integer.
std::int64_t squeezed_channels(std::int64_t c, double gamma);

template <typename T>
struct GatedFfn {
  LayerNorm<T> norm;
  Conv2d<T> proj_in;           // 1x1, c -> 2 * hidden
  DepthwiseConv2d<T> spatial;  // 3x3 on 2 * hidden
  Conv2d<T> proj_out;          // 1x1, hidden -> c, zero-initialized
  std::int64_t hidden = 0;

  static GatedFfn make(ParamStore<T>& store, const std::string& name, std::int64_t c, double ratio,
                       PadMode pad_mode = PadMode::kZero);
};

/// x + proj_out(gelu(a) * b) where [a, b] = spatial(proj_in(norm(x))).
template <typename T>
Tensor<T> gated_ffn(const Tensor<T>& x, const GatedFfn<T>& ffn);

struct MhdlsaConfig {
  std::int64_t channels = 90;
  std::int64_t heads = 6;
  int k = 3;
  double gamma = 0.5;
  double ffn_ratio = 2.66;
  PadMode pad_mode = PadMode::kZero;
};

template <typename T>
struct MhdlsaParams {
  MhdlsaConfig cfg;
  LayerNorm<T> norm;
  Conv2d<T> proj;                  // 1x1, c -> c
  Conv2d<T> gen_squeeze;           // 1x1, c -> gamma c
  DepthwiseConv2d<T> gen_spatial;  // 7x7 on gamma c
  Conv2d<T> gen_expand;            // 1x1, gamma c -> heads k k, zero-initialized
  GatedFfn<T> ffn;

  static MhdlsaParams make(ParamStore<T>& store, const std::string& name, const MhdlsaConfig& cfg);
};

/// Kernel field from the projected features: a purely linear three-layer
/// stack with no normalization or activation.
template <typename T>
Tensor<T> generate_dynamic_weights(const Tensor<T>& y_in, const MhdlsaParams<T>& p);

/// out[n,ch,y,x] = sum_t field[n, g(ch)*k*k + t, y, x] * y_in[n, ch, y+dy-k/2, x+dx-k/2],
/// with zero (or circular) extension outside the image.
template <typename T>
Tensor<T> dynamic_local_aggregate(const Tensor<T>& field, const Tensor<T>& y_in, std::int64_t heads, int k,
                                  PadMode pad_mode = PadMode::kZero);

template <typename T>
Tensor<T> mhdlsa_block(const Tensor<T>& x, const MhdlsaParams<T>& p);

}  // namespace dlgsa
