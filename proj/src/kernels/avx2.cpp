// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2/FMA kernels. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here runs unless dispatch confirmed CPU support.
// Standard-library templates are avoided on purpose: their out-of-line
// instantiations would be emitted with AVX2 code and could be picked by the
// linker for callers in baseline translation units.

#include <immintrin.h>

#include "dlgsa/kernels.hpp"

namespace dlgsa::kernels {
namespace {

inline index_t imin(index_t a, index_t b) { return a < b ? a : b; }
inline index_t imax(index_t a, index_t b) { return a > b ? a : b; }

template <typename T>
inline void fill_zero(T* p, index_t n) {
  for (index_t i = 0; i < n; ++i) p[i] = T(0);
}

template <typename T>
struct Scratch {
  explicit Scratch(index_t n) : ptr(new T[static_cast<unsigned long>(n)]) {}
  ~Scratch() { delete[] ptr; }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;
  T* ptr;
};

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using reg = __m256;
  static constexpr index_t width = 8;
  static reg zero() { return _mm256_setzero_ps(); }
  static reg set1(float v) { return _mm256_set1_ps(v); }
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
  static reg fma(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  static reg sub(reg a, reg b) { return _mm256_sub_ps(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
  static reg div(reg a, reg b) { return _mm256_div_ps(a, b); }
  // Range reduction to |r| <= ln2/2, then a degree 7 Taylor polynomial.
  static reg exp(reg x) {
    x = _mm256_min_ps(_mm256_max_ps(x, set1(-87.3f)), set1(88.3f));
    const reg fx = _mm256_round_ps(_mm256_mul_ps(x, set1(1.44269504088896341f)),
                                   _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    reg r = _mm256_fnmadd_ps(fx, set1(0.693359375f), x);
    r = _mm256_fnmadd_ps(fx, set1(-2.12194440e-4f), r);
    reg p = set1(1.0f / 5040.0f);
    p = fma(p, r, set1(1.0f / 720.0f));
    p = fma(p, r, set1(1.0f / 120.0f));
    p = fma(p, r, set1(1.0f / 24.0f));
    p = fma(p, r, set1(1.0f / 6.0f));
    p = fma(p, r, set1(0.5f));
    p = fma(p, r, set1(1.0f));
    p = fma(p, r, set1(1.0f));
    const __m256i e = _mm256_slli_epi32(_mm256_add_epi32(_mm256_cvtps_epi32(fx), _mm256_set1_epi32(127)), 23);
    return _mm256_mul_ps(p, _mm256_castsi256_ps(e));
  }
  static float hsum(reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    __m128 s = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, s);
    s = _mm_add_ss(s, sh);
    return _mm_cvtss_f32(s);
  }
};

template <>
struct Vec<double> {
  using reg = __m256d;
  static constexpr index_t width = 4;
  static reg zero() { return _mm256_setzero_pd(); }
  static reg set1(double v) { return _mm256_set1_pd(v); }
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg fma(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static reg sub(reg a, reg b) { return _mm256_sub_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  static reg div(reg a, reg b) { return _mm256_div_pd(a, b); }
  // Range reduction to |r| <= ln2/2, then a degree 13 Taylor polynomial.
  static reg exp(reg x) {
    x = _mm256_min_pd(_mm256_max_pd(x, set1(-708.0)), set1(708.0));
    const reg fx = _mm256_round_pd(_mm256_mul_pd(x, set1(1.4426950408889634074)),
                                   _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    reg r = _mm256_fnmadd_pd(fx, set1(6.93145751953125e-1), x);
    r = _mm256_fnmadd_pd(fx, set1(1.42860682030941723212e-6), r);
    double inv_fact[14];
    inv_fact[0] = 1.0;
    for (int i = 1; i < 14; ++i) inv_fact[i] = inv_fact[i - 1] / i;
    reg p = set1(inv_fact[13]);
    for (int i = 12; i >= 0; --i) p = fma(p, r, set1(inv_fact[i]));
    const __m256i k = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(fx));
    const __m256i e = _mm256_slli_epi64(_mm256_add_epi64(k, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(e));
  }
  static double hsum(reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
  }
};

// y[0:n] += a * x[0:n]
template <typename T>
inline void axpy(index_t n, T a, const T* x, T* y) {
  using V = Vec<T>;
  const auto va = V::set1(a);
  index_t i = 0;
  for (; i + 2 * V::width <= n; i += 2 * V::width) {
    V::store(y + i, V::fma(va, V::load(x + i), V::load(y + i)));
    V::store(y + i + V::width, V::fma(va, V::load(x + i + V::width), V::load(y + i + V::width)));
  }
  for (; i + V::width <= n; i += V::width) V::store(y + i, V::fma(va, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

// y[0:n] += u[0:n] * v[0:n]
template <typename T>
inline void vmul_acc(index_t n, const T* u, const T* v, T* y) {
  using V = Vec<T>;
  index_t i = 0;
  for (; i + V::width <= n; i += V::width) V::store(y + i, V::fma(V::load(u + i), V::load(v + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += u[i] * v[i];
}

template <typename T>
inline T dot(index_t n, const T* u, const T* v) {
  using V = Vec<T>;
  auto a0 = V::zero(), a1 = V::zero();
  index_t i = 0;
  for (; i + 2 * V::width <= n; i += 2 * V::width) {
    a0 = V::fma(V::load(u + i), V::load(v + i), a0);
    a1 = V::fma(V::load(u + i + V::width), V::load(v + i + V::width), a1);
  }
  for (; i + V::width <= n; i += V::width) a0 = V::fma(V::load(u + i), V::load(v + i), a0);
  T acc = V::hsum(V::add(a0, a1));
  for (; i < n; ++i) acc += u[i] * v[i];
  return acc;
}

// Register-blocked update of an MR x (2*width) tile of C over the full depth.
// A element (i, p) lives at a[i * a_row + p * a_col].
template <typename T, int MR>
inline void micro_tile(index_t depth, const T* a, index_t a_row, index_t a_col, const T* b, index_t ldb,
                       T* c, index_t ldc) {
  using V = Vec<T>;
  typename V::reg acc0[MR], acc1[MR];
  for (int r = 0; r < MR; ++r) {
    acc0[r] = V::load(c + r * ldc);
    acc1[r] = V::load(c + r * ldc + V::width);
  }
  for (index_t p = 0; p < depth; ++p) {
    const auto b0 = V::load(b + p * ldb);
    const auto b1 = V::load(b + p * ldb + V::width);
    const T* ap = a + p * a_col;
    for (int r = 0; r < MR; ++r) {
      const auto av = V::set1(ap[r * a_row]);
      acc0[r] = V::fma(av, b0, acc0[r]);
      acc1[r] = V::fma(av, b1, acc1[r]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    V::store(c + r * ldc, acc0[r]);
    V::store(c + r * ldc + V::width, acc1[r]);
  }
}

template <typename T>
inline void micro_rows(int rows, index_t depth, const T* a, index_t a_row, index_t a_col, const T* b,
                       index_t ldb, T* c, index_t ldc) {
  switch (rows) {
    case 6: micro_tile<T, 6>(depth, a, a_row, a_col, b, ldb, c, ldc); break;
    case 5: micro_tile<T, 5>(depth, a, a_row, a_col, b, ldb, c, ldc); break;
    case 4: micro_tile<T, 4>(depth, a, a_row, a_col, b, ldb, c, ldc); break;
    case 3: micro_tile<T, 3>(depth, a, a_row, a_col, b, ldb, c, ldc); break;
    case 2: micro_tile<T, 2>(depth, a, a_row, a_col, b, ldb, c, ldc); break;
    default: micro_tile<T, 1>(depth, a, a_row, a_col, b, ldb, c, ldc); break;
  }
}

template <typename T>
void gemm(bool trans_a, bool trans_b, index_t m, index_t n, index_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  using V = Vec<T>;
  if (!accumulate) fill_zero(c, m * n);
  if (m == 0 || n == 0 || k == 0) return;

  Scratch<T> bt(trans_b ? k * n : 0);
  if (trans_b) {
    for (index_t j = 0; j < n; ++j)
      for (index_t p = 0; p < k; ++p) bt.ptr[p * n + j] = b[j * k + p];
    b = bt.ptr;
  }
  const index_t a_row = trans_a ? 1 : k;
  const index_t a_col = trans_a ? m : 1;
  constexpr index_t nr = 2 * V::width;
  constexpr index_t kc = 256;  // depth block keeps the B panel in L1

  const index_t n_main = n - n % nr;
  for (index_t p0 = 0; p0 < k; p0 += kc) {
    const index_t depth = imin(kc, k - p0);
    for (index_t j = 0; j < n_main; j += nr) {
      for (index_t i = 0; i < m; i += 6) {
        const int rows = static_cast<int>(imin(6, m - i));
        micro_rows<T>(rows, depth, a + i * a_row + p0 * a_col, a_row, a_col, b + p0 * n + j, n,
                      c + i * n + j, n);
      }
    }
  }
  if (n_main < n) {
    for (index_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (index_t p = 0; p < k; ++p) {
        const T aip = a[i * a_row + p * a_col];
        const T* brow = b + p * n;
        for (index_t j = n_main; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
}

inline void valid_range(index_t shift, index_t in_extent, index_t out_extent, index_t& lo, index_t& hi) {
  lo = imax(0, -shift);
  hi = imin(out_extent, in_extent - shift);
  if (hi < lo) hi = lo;
}

// Copies a plane into a zero border: dst is (h + top + bottom) x (w + left + right).
template <typename T>
void pad_plane(const T* src, index_t h, index_t w, index_t top, index_t bottom, index_t left, index_t right,
               T* dst) {
  const index_t pw = w + left + right;
  fill_zero(dst, (h + top + bottom) * pw);
  for (index_t y = 0; y < h; ++y) {
    T* row = dst + (y + top) * pw + left;
    for (index_t x = 0; x < w; ++x) row[x] = src[y * w + x];
  }
}

// out[y, x] (+)= sum kernel[ky, kx] * src[y + ky, x + kx] over a source with
// row stride ld that needs no bounds checks.
template <typename T>
void dense_corr(const T* src, index_t ld, const T* kernel, index_t k, index_t out_h, index_t out_w, T* out,
                bool accumulate) {
  using V = Vec<T>;
  constexpr index_t w2 = 2 * V::width;
  for (index_t y = 0; y < out_h; ++y) {
    T* orow = out + y * out_w;
    index_t x = 0;
    for (; x + w2 <= out_w; x += w2) {
      auto a0 = accumulate ? V::load(orow + x) : V::zero();
      auto a1 = accumulate ? V::load(orow + x + V::width) : V::zero();
      for (index_t ky = 0; ky < k; ++ky) {
        const T* srow = src + (y + ky) * ld + x;
        for (index_t kx = 0; kx < k; ++kx) {
          const auto wv = V::set1(kernel[ky * k + kx]);
          a0 = V::fma(wv, V::load(srow + kx), a0);
          a1 = V::fma(wv, V::load(srow + kx + V::width), a1);
        }
      }
      V::store(orow + x, a0);
      V::store(orow + x + V::width, a1);
    }
    for (; x + V::width <= out_w; x += V::width) {
      auto a0 = accumulate ? V::load(orow + x) : V::zero();
      for (index_t ky = 0; ky < k; ++ky) {
        const T* srow = src + (y + ky) * ld + x;
        for (index_t kx = 0; kx < k; ++kx) a0 = V::fma(V::set1(kernel[ky * k + kx]), V::load(srow + kx), a0);
      }
      V::store(orow + x, a0);
    }
    for (; x < out_w; ++x) {
      T acc = accumulate ? orow[x] : T(0);
      for (index_t ky = 0; ky < k; ++ky)
        for (index_t kx = 0; kx < k; ++kx) acc += kernel[ky * k + kx] * src[(y + ky) * ld + x + kx];
      orow[x] = acc;
    }
  }
}

// Rows and columns of zero border needed so that every tap of every output
// stays inside the padded source.
inline index_t far_border(index_t in_extent, index_t out_extent, index_t k, index_t pad) {
  return imax(0, out_extent + k - 1 - pad - in_extent);
}

template <typename T>
void plane_conv_forward(const PlaneConv& g, const T* in, const T* kernel, T* out) {
  const index_t bh = far_border(g.in_h, g.out_h, g.k, g.pad), bw = far_border(g.in_w, g.out_w, g.k, g.pad);
  if (g.pad == 0 && bh == 0 && bw == 0) {
    dense_corr(in, g.in_w, kernel, g.k, g.out_h, g.out_w, out, false);
    return;
  }
  const index_t pw = g.in_w + g.pad + bw;
  Scratch<T> padded((g.in_h + g.pad + bh) * pw);
  pad_plane(in, g.in_h, g.in_w, g.pad, bh, g.pad, bw, padded.ptr);
  dense_corr(padded.ptr, pw, kernel, g.k, g.out_h, g.out_w, out, false);
}

template <typename T>
void plane_conv_backward_input(const PlaneConv& g, const T* grad_out, const T* kernel, T* grad_in) {
  // A full correlation of grad_out with the flipped kernel.
  const index_t lead = g.k - 1 - g.pad;
  const index_t bh = far_border(g.out_h, g.in_h, g.k, lead), bw = far_border(g.out_w, g.in_w, g.k, lead);
  const index_t pw = g.out_w + lead + bw;
  Scratch<T> padded((g.out_h + lead + bh) * pw);
  pad_plane(grad_out, g.out_h, g.out_w, lead, bh, lead, bw, padded.ptr);
  T flipped[64];
  T* fk = g.k * g.k <= 64 ? flipped : nullptr;
  Scratch<T> big(fk == nullptr ? g.k * g.k : 0);
  if (fk == nullptr) fk = big.ptr;
  for (index_t t = 0; t < g.k * g.k; ++t) fk[t] = kernel[g.k * g.k - 1 - t];
  dense_corr(padded.ptr, pw, fk, g.k, g.in_h, g.in_w, grad_in, true);
}

template <typename T>
void plane_conv_backward_kernel(const PlaneConv& g, const T* grad_out, const T* in, T* grad_kernel) {
  using V = Vec<T>;
  const index_t bh = far_border(g.in_h, g.out_h, g.k, g.pad), bw = far_border(g.in_w, g.out_w, g.k, g.pad);
  const T* src = in;
  index_t ld = g.in_w;
  const bool needs_border = g.pad != 0 || bh != 0 || bw != 0;
  Scratch<T> padded(needs_border ? (g.in_h + g.pad + bh) * (g.in_w + g.pad + bw) : 0);
  if (needs_border) {
    ld = g.in_w + g.pad + bw;
    pad_plane(in, g.in_h, g.in_w, g.pad, bh, g.pad, bw, padded.ptr);
    src = padded.ptr;
  }
  const index_t vec_end = g.out_w - g.out_w % V::width;
  for (index_t ky = 0; ky < g.k; ++ky) {
    for (index_t kx = 0; kx < g.k; ++kx) {
      auto a0 = V::zero(), a1 = V::zero();
      T tail = T(0);
      for (index_t y = 0; y < g.out_h; ++y) {
        const T* grow = grad_out + y * g.out_w;
        const T* srow = src + (y + ky) * ld + kx;
        index_t x = 0;
        for (; x + 2 * V::width <= vec_end; x += 2 * V::width) {
          a0 = V::fma(V::load(grow + x), V::load(srow + x), a0);
          a1 = V::fma(V::load(grow + x + V::width), V::load(srow + x + V::width), a1);
        }
        for (; x < vec_end; x += V::width) a0 = V::fma(V::load(grow + x), V::load(srow + x), a0);
        for (; x < g.out_w; ++x) tail += grow[x] * srow[x];
      }
      grad_kernel[ky * g.k + kx] += V::hsum(V::add(a0, a1)) + tail;
    }
  }
}

template <typename T>
void dynamic_forward(const DynamicGeom& g, const T* taps, const T* in, T* out) {
  const index_t plane = g.h * g.w, half = g.k / 2;
  fill_zero(out, g.channels * plane);
  for (index_t c = 0; c < g.channels; ++c) {
    for (index_t t = 0; t < g.k * g.k; ++t) {
      const index_t sy = t / g.k - half, sx = t % g.k - half;
      index_t y0, y1, x0, x1;
      valid_range(sy, g.h, g.h, y0, y1);
      valid_range(sx, g.w, g.w, x0, x1);
      for (index_t y = y0; y < y1; ++y) {
        vmul_acc(x1 - x0, taps + t * plane + y * g.w + x0, in + c * plane + (y + sy) * g.w + sx + x0,
                 out + c * plane + y * g.w + x0);
      }
    }
  }
}

template <typename T>
void dynamic_backward(const DynamicGeom& g, const T* taps, const T* in, const T* grad_out, T* grad_taps,
                      T* grad_in) {
  const index_t plane = g.h * g.w, half = g.k / 2;
  for (index_t c = 0; c < g.channels; ++c) {
    for (index_t t = 0; t < g.k * g.k; ++t) {
      const index_t sy = t / g.k - half, sx = t % g.k - half;
      index_t y0, y1, x0, x1;
      valid_range(sy, g.h, g.h, y0, y1);
      valid_range(sx, g.w, g.w, x0, x1);
      for (index_t y = y0; y < y1; ++y) {
        const index_t src = c * plane + (y + sy) * g.w + sx + x0;
        const T* grow = grad_out + c * plane + y * g.w + x0;
        if (grad_taps != nullptr) vmul_acc(x1 - x0, grow, in + src, grad_taps + t * plane + y * g.w + x0);
        if (grad_in != nullptr) vmul_acc(x1 - x0, grow, taps + t * plane + y * g.w + x0, grad_in + src);
      }
    }
  }
}

template <typename T>
inline typename Vec<T>::reg vtanh(typename Vec<T>::reg u) {
  using V = Vec<T>;
  const auto e = V::exp(V::add(u, u));
  return V::sub(V::set1(T(1)), V::div(V::set1(T(2)), V::add(e, V::set1(T(1)))));
}

template <typename T>
inline T stanh(T u) {
  using V = Vec<T>;
  T buf[8];
  V::store(buf, vtanh<T>(V::set1(u)));
  return buf[0];
}

template <typename T>
void gelu_forward(index_t n, const T* x, T* y) {
  using V = Vec<T>;
  const auto a = V::set1(T(0.7978845608028654)), b = V::set1(T(0.044715)), half = V::set1(T(0.5)),
             one = V::set1(T(1));
  index_t i = 0;
  for (; i + V::width <= n; i += V::width) {
    const auto v = V::load(x + i);
    const auto u = V::mul(a, V::fma(V::mul(b, V::mul(v, v)), v, v));
    V::store(y + i, V::mul(V::mul(half, v), V::add(one, vtanh<T>(u))));
  }
  for (; i < n; ++i) {
    const T v = x[i];
    y[i] = T(0.5) * v * (T(1) + stanh<T>(T(0.7978845608028654) * (v + T(0.044715) * v * v * v)));
  }
}

template <typename T>
void gelu_backward(index_t n, const T* x, const T* grad_y, T* grad_x) {
  using V = Vec<T>;
  const auto a = V::set1(T(0.7978845608028654)), b = V::set1(T(0.044715)), b3 = V::set1(T(3 * 0.044715)),
             half = V::set1(T(0.5)), one = V::set1(T(1));
  index_t i = 0;
  for (; i + V::width <= n; i += V::width) {
    const auto v = V::load(x + i);
    const auto v2 = V::mul(v, v);
    const auto t = vtanh<T>(V::mul(a, V::fma(V::mul(b, v2), v, v)));
    const auto sech2 = V::sub(one, V::mul(t, t));
    const auto inner = V::mul(a, V::fma(b3, v2, one));
    const auto d = V::fma(V::mul(half, v), V::mul(sech2, inner), V::mul(half, V::add(one, t)));
    V::store(grad_x + i, V::fma(V::load(grad_y + i), d, V::load(grad_x + i)));
  }
  for (; i < n; ++i) {
    const T v = x[i];
    const T t = stanh<T>(T(0.7978845608028654) * (v + T(0.044715) * v * v * v));
    const T d = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * T(0.7978845608028654) *
                                          (T(1) + T(3 * 0.044715) * v * v);
    grad_x[i] += grad_y[i] * d;
  }
}

template <typename T>
KernelSet<T> make_avx2() {
  return KernelSet<T>{"avx2",
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

namespace avx2_impl {
const KernelSet<float>& f32() {
  static const KernelSet<float> set = make_avx2<float>();
  return set;
}
const KernelSet<double>& f64() {
  static const KernelSet<double> set = make_avx2<double>();
  return set;
}
}  // namespace avx2_impl

}  // namespace dlgsa::kernels
