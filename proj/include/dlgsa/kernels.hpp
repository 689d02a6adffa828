// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Arithmetic inner loops behind the tensor ops. Each kernel has a portable
// scalar reference and, on x86-64, an AVX2/FMA variant. The active set is
// chosen once at startup from CPUID and can be forced with the environment
// variable DLGSA_KERNELS=scalar|avx2 or with `select`.
//
// Results of the two variants agree to rounding, not bitwise: the SIMD
// reductions associate differently. Within one variant every kernel is
// deterministic.

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace dlgsa::kernels {

using index_t = std::int64_t;

/// Geometry of a single-channel correlation: out[y,x] = sum k[ky,kx] *
/// in[y+ky-pad, x+kx-pad], zero outside the input.
struct PlaneConv {
  index_t in_h, in_w;
  index_t out_h, out_w;
  index_t k;
  index_t pad;
};

/// Geometry of the per-pixel (dynamic) correlation. A group of `channels`
/// planes shares one field of k*k tap planes, each of size h*w.
struct DynamicGeom {
  index_t h, w;
  index_t k;
  index_t channels;
};

template <typename T>
struct KernelSet {
  const char* name;

  /// C(m x n) (+)= op(A) * op(B), all row-major and densely packed.
  /// op(A) is m x k: A is m x k, or k x m when trans_a.
  /// op(B) is k x n: B is k x n, or n x k when trans_b.
  void (*gemm)(bool trans_a, bool trans_b, index_t m, index_t n, index_t k, const T* a, const T* b,
               T* c, bool accumulate);

  /// out = corr(in, kernel). Overwrites out.
  void (*plane_conv_forward)(const PlaneConv& g, const T* in, const T* kernel, T* out);
  /// grad_in += corr^T(grad_out, kernel).
  void (*plane_conv_backward_input)(const PlaneConv& g, const T* grad_out, const T* kernel,
                                    T* grad_in);
  /// grad_kernel += sum over outputs of grad_out * shifted input.
  void (*plane_conv_backward_kernel)(const PlaneConv& g, const T* grad_out, const T* in,
                                     T* grad_kernel);

  /// out[c,y,x] = sum_t taps[t,y,x] * in[c, y+dy-k/2, x+dx-k/2]. Overwrites out.
  void (*dynamic_forward)(const DynamicGeom& g, const T* taps, const T* in, T* out);
  /// Accumulates into grad_taps and grad_in; either may be null.
  void (*dynamic_backward)(const DynamicGeom& g, const T* taps, const T* in, const T* grad_out,
                           T* grad_taps, T* grad_in);

  /// y = 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))) over n elements.
  void (*gelu_forward)(index_t n, const T* x, T* y);
  /// grad_x += grad_y * gelu'(x).
  void (*gelu_backward)(index_t n, const T* x, const T* grad_y, T* grad_x);
};

const KernelSet<float>& scalar_f32();
const KernelSet<double>& scalar_f64();

/// Null when the CPU or the build lacks AVX2/FMA.
const KernelSet<float>* avx2_f32();
const KernelSet<double>* avx2_f64();

template <typename T>
const KernelSet<T>& active();

/// Name of the active variant ("scalar" or "avx2").
std::string_view active_name();

/// Forces a variant. Returns false (and changes nothing) if unavailable.
bool select(std::string_view name);

/// Variants usable on this machine, scalar first.
std::vector<std::string_view> available();

}  // namespace dlgsa::kernels
