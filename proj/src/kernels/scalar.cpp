// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Portable reference kernels. Written for clarity; the SIMD variants are
// checked against these.

#include <algorithm>
#include <cmath>

#include "dlgsa/kernels.hpp"

namespace dlgsa::kernels {
namespace {

template <typename T>
void gemm(bool trans_a, bool trans_b, index_t m, index_t n, index_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T(0));
  for (index_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (index_t p = 0; p < k; ++p) {
      const T aip = trans_a ? a[p * m + i] : a[i * k + p];
      if (aip == T(0)) continue;
      if (trans_b) {
        for (index_t j = 0; j < n; ++j) crow[j] += aip * b[j * k + p];
      } else {
        const T* brow = b + p * n;
        for (index_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
}

// Output columns [lo, hi) for which in-column x + kx - pad is inside [0, in_w).
inline void valid_range(index_t shift, index_t in_extent, index_t out_extent, index_t& lo,
                        index_t& hi) {
  lo = std::max<index_t>(0, -shift);
  hi = std::min<index_t>(out_extent, in_extent - shift);
  if (hi < lo) hi = lo;
}

template <typename T>
void plane_conv_forward(const PlaneConv& g, const T* in, const T* kernel, T* out) {
  std::fill(out, out + g.out_h * g.out_w, T(0));
  for (index_t ky = 0; ky < g.k; ++ky) {
    for (index_t kx = 0; kx < g.k; ++kx) {
      const T wv = kernel[ky * g.k + kx];
      const index_t sy = ky - g.pad, sx = kx - g.pad;
      index_t y0, y1, x0, x1;
      valid_range(sy, g.in_h, g.out_h, y0, y1);
      valid_range(sx, g.in_w, g.out_w, x0, x1);
      for (index_t y = y0; y < y1; ++y) {
        const T* irow = in + (y + sy) * g.in_w + sx;
        T* orow = out + y * g.out_w;
        for (index_t x = x0; x < x1; ++x) orow[x] += wv * irow[x];
      }
    }
  }
}

template <typename T>
void plane_conv_backward_input(const PlaneConv& g, const T* grad_out, const T* kernel, T* grad_in) {
  for (index_t ky = 0; ky < g.k; ++ky) {
    for (index_t kx = 0; kx < g.k; ++kx) {
      const T wv = kernel[ky * g.k + kx];
      const index_t sy = ky - g.pad, sx = kx - g.pad;
      index_t y0, y1, x0, x1;
      valid_range(sy, g.in_h, g.out_h, y0, y1);
      valid_range(sx, g.in_w, g.out_w, x0, x1);
      for (index_t y = y0; y < y1; ++y) {
        T* irow = grad_in + (y + sy) * g.in_w + sx;
        const T* orow = grad_out + y * g.out_w;
        for (index_t x = x0; x < x1; ++x) irow[x] += wv * orow[x];
      }
    }
  }
}

template <typename T>
void plane_conv_backward_kernel(const PlaneConv& g, const T* grad_out, const T* in, T* grad_kernel) {
  for (index_t ky = 0; ky < g.k; ++ky) {
    for (index_t kx = 0; kx < g.k; ++kx) {
      const index_t sy = ky - g.pad, sx = kx - g.pad;
      index_t y0, y1, x0, x1;
      valid_range(sy, g.in_h, g.out_h, y0, y1);
      valid_range(sx, g.in_w, g.out_w, x0, x1);
      T acc = T(0);
      for (index_t y = y0; y < y1; ++y) {
        const T* irow = in + (y + sy) * g.in_w + sx;
        const T* orow = grad_out + y * g.out_w;
        for (index_t x = x0; x < x1; ++x) acc += orow[x] * irow[x];
      }
      grad_kernel[ky * g.k + kx] += acc;
    }
  }
}

template <typename T>
void dynamic_forward(const DynamicGeom& g, const T* taps, const T* in, T* out) {
  const index_t plane = g.h * g.w, half = g.k / 2;
  std::fill(out, out + g.channels * plane, T(0));
  for (index_t c = 0; c < g.channels; ++c) {
    const T* ic = in + c * plane;
    T* oc = out + c * plane;
    for (index_t t = 0; t < g.k * g.k; ++t) {
      const index_t sy = t / g.k - half, sx = t % g.k - half;
      const T* tp = taps + t * plane;
      index_t y0, y1, x0, x1;
      valid_range(sy, g.h, g.h, y0, y1);
      valid_range(sx, g.w, g.w, x0, x1);
      for (index_t y = y0; y < y1; ++y) {
        const T* irow = ic + (y + sy) * g.w + sx;
        const T* trow = tp + y * g.w;
        T* orow = oc + y * g.w;
        for (index_t x = x0; x < x1; ++x) orow[x] += trow[x] * irow[x];
      }
    }
  }
}

template <typename T>
void dynamic_backward(const DynamicGeom& g, const T* taps, const T* in, const T* grad_out,
                      T* grad_taps, T* grad_in) {
  const index_t plane = g.h * g.w, half = g.k / 2;
  for (index_t c = 0; c < g.channels; ++c) {
    const T* ic = in + c * plane;
    const T* gc = grad_out + c * plane;
    for (index_t t = 0; t < g.k * g.k; ++t) {
      const index_t sy = t / g.k - half, sx = t % g.k - half;
      index_t y0, y1, x0, x1;
      valid_range(sy, g.h, g.h, y0, y1);
      valid_range(sx, g.w, g.w, x0, x1);
      for (index_t y = y0; y < y1; ++y) {
        const index_t src = (y + sy) * g.w + sx;
        const T* grow = gc + y * g.w;
        if (grad_taps != nullptr) {
          T* gt = grad_taps + t * plane + y * g.w;
          const T* irow = ic + src;
          for (index_t x = x0; x < x1; ++x) gt[x] += grow[x] * irow[x];
        }
        if (grad_in != nullptr) {
          const T* trow = taps + t * plane + y * g.w;
          T* gi = grad_in + c * plane + src;
          for (index_t x = x0; x < x1; ++x) gi[x] += grow[x] * trow[x];
        }
      }
    }
  }
}

// sqrt(2/pi) and the cubic coefficient of the tanh approximation.
constexpr double kGeluAlpha = 0.7978845608028654;
constexpr double kGeluBeta = 0.044715;

template <typename T>
void gelu_forward(index_t n, const T* x, T* y) {
  const T a = T(kGeluAlpha), b = T(kGeluBeta);
  for (index_t i = 0; i < n; ++i) {
    const T v = x[i];
    y[i] = T(0.5) * v * (T(1) + std::tanh(a * (v + b * v * v * v)));
  }
}

template <typename T>
void gelu_backward(index_t n, const T* x, const T* grad_y, T* grad_x) {
  const T a = T(kGeluAlpha), b = T(kGeluBeta);
  for (index_t i = 0; i < n; ++i) {
    const T v = x[i];
    const T t = std::tanh(a * (v + b * v * v * v));
    grad_x[i] += grad_y[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * a * (T(1) + T(3) * b * v * v));
  }
}

template <typename T>
KernelSet<T> make_scalar() {
  return KernelSet<T>{"scalar",
                      &gemm<T>,
                      &plane_conv_forward<T>,
                      &plane_conv_backward_input<T>,
                      &plane_conv_backward_kernel<T>,
                      &dynamic_forward<T>,
                      &dynamic_backward<T>,
                      &gelu_forward<T>,
                      &gelu_backward<T>};
}

}  // namespace

const KernelSet<float>& scalar_f32() {
  static const KernelSet<float> set = make_scalar<float>();
  return set;
}

const KernelSet<double>& scalar_f64() {
  static const KernelSet<double> set = make_scalar<double>();
  return set;
}

}  // namespace dlgsa::kernels
