// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Differentiable tensor operations. Every op takes and returns NCHW tensors,
// records a backward rule when any input requires grad, and throws
// DimensionError on shape mismatch.

#pragma once

#include <cstdint>
#include <vector>

#include "dlgsa/tensor.hpp"

namespace dlgsa {

enum class PadMode { kZero, kReflect, kCircular };

struct Conv2dOptions {
  int stride = 1;
  int pad = 0;
  PadMode pad_mode = PadMode::kZero;
  int groups = 1;
};

/// Cross-correlation (no kernel flip). weight is [cout, cin/groups, kh, kw];
/// bias is optional (undefined tensor) with cout elements.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dOptions& opt = {});

/// Per-channel correlation with a [c,1,k,k] weight. Zero padding of k/2 keeps
/// the spatial size; other modes pad explicitly first.
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           PadMode pad_mode = PadMode::kZero);

/// Pads h and w by `pad` on every side.
template <typename T>
Tensor<T> pad2d(const Tensor<T>& input, int pad, PadMode mode);

/// Normalizes over channels independently at each (n, y, x), then applies a
/// per-channel gain and offset (each shaped [1,c,1,1]).
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gain, const Tensor<T>& offset,
                     T eps = T(1e-5));

/// [n, c*r*r, h, w] -> [n, c, h*r, w*r]; input channel c*r*r + i*r + j lands at
/// output row y*r + i, column x*r + j.
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& input, int r);

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& input, int r);

/// Per (n, c) slice: an [h, w] matrix. Returns op(a) * op(b) where op
/// transposes when the flag is set. Batch extents must agree, except that b
/// may have n == 1 and is then shared across a's batch.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a = false,
                 bool trans_b = false);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

/// Tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> exp(const Tensor<T>& x);

/// a + b. b may have n == 1 and is then broadcast over a's batch axis.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise product, same broadcast rule as add.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s);

/// x[n,c,h,w] * s[c] where s has shape [1,c,1,1].
template <typename T>
Tensor<T> channel_scale(const Tensor<T>& x, const Tensor<T>& s);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mean(const Tensor<T>& x);

/// Softmax along w.
template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x);

/// Divides every w-row by max(||row||_2, eps).
template <typename T>
Tensor<T> l2_normalize_lastdim(const Tensor<T>& x, T eps = T(1e-12));

/// Same data, new shape of equal element count.
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Channels [begin, begin + count).
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t begin, std::int64_t count);

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

/// [n, c, h, w] -> [n * (h/win) * (w/win), c, win, win], windows in raster order.
template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, int win);

/// Inverse of window_partition for an image of size h x w.
template <typename T>
Tensor<T> window_merge(const Tensor<T>& windows, std::int64_t h, std::int64_t w);

/// Throws NumericError naming `where` if any element is NaN or Inf.
template <typename T>
void check_finite(const Tensor<T>& x, const char* where);

}  // namespace dlgsa
