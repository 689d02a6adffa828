// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations in double precision. Each one is
// written directly from the operation's definition with plain nested loops
// and shares no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dlgsa/tensor.hpp"

namespace oracle {

using Vec = std::vector<double>;

template <typename T>
Vec values(const dlgsa::Tensor<T>& t) {
  return Vec(t.data().begin(), t.data().end());
}

template <typename T>
dlgsa::Tensor<T> tensor(dlgsa::Shape s, const Vec& v, bool requires_grad = false) {
  return dlgsa::Tensor<T>(s, std::vector<T>(v.begin(), v.end()), requires_grad);
}

template <typename T>
double max_abs_diff(const Vec& want, const dlgsa::Tensor<T>& got) {
  auto g = got.data();
  if (g.size() != want.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) m = std::max(m, std::fabs(want[i] - double(g[i])));
  return m;
}

inline Vec uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (double& x : v) x = d(rng);
  return v;
}

/// out[n,ch,y,x] = sum_{dy,dx} field[n, head(ch)*k*k + dy*k + dx, y, x] *
///                 feat[n, ch, y+dy-k/2, x+dx-k/2], zero outside.
inline Vec dynamic_aggregate(const Vec& field, const Vec& feat, int n, int c, int h, int w, int heads, int k) {
  Vec out(feat.size(), 0.0);
  const int per_head = c / heads, r = k / 2;
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      const int g = ch / per_head;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int sy = y + dy - r, sx = x + dx - r;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              const double wt = field[((std::size_t(b) * heads * k * k + g * k * k + dy * k + dx) * h + y) * w + x];
              acc += wt * feat[((std::size_t(b) * c + ch) * h + sy) * w + sx];
            }
          out[((std::size_t(b) * c + ch) * h + y) * w + x] = acc;
        }
    }
  return out;
}

/// Per sample and head, with d = c/heads rows of length h*w:
///   A[i][j] = gate(sum_p q[i][p] k[j][p] / alpha[head]),  out[i][p] = sum_j A[i][j] v[j][p].
/// With `normalize`, every q and k row is first divided by its L2 norm.
inline Vec channel_attention(const Vec& q, const Vec& k, const Vec& v, const Vec& alpha, int n, int c, int h, int w,
                             int heads, bool softmax, bool normalize, Vec* attn = nullptr) {
  const int d = c / heads, hw = h * w;
  Vec out(q.size(), 0.0);
  if (attn != nullptr) attn->assign(std::size_t(n) * heads * d * d, 0.0);
  auto row = [&](const Vec& t, int b, int ch) { return &t[(std::size_t(b) * c + ch) * hw]; };
  for (int b = 0; b < n; ++b)
    for (int g = 0; g < heads; ++g) {
      std::vector<Vec> a(d, Vec(d, 0.0));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const double* qi = row(q, b, g * d + i);
          const double* kj = row(k, b, g * d + j);
          double dot = 0.0, nq = 0.0, nk = 0.0;
          for (int p = 0; p < hw; ++p) {
            dot += qi[p] * kj[p];
            nq += qi[p] * qi[p];
            nk += kj[p] * kj[p];
          }
          if (normalize) dot /= std::max(std::sqrt(nq), 1e-12) * std::max(std::sqrt(nk), 1e-12);
          a[i][j] = dot / alpha[g];
        }
      for (int i = 0; i < d; ++i) {
        if (softmax) {
          double mx = a[i][0], s = 0.0;
          for (int j = 1; j < d; ++j) mx = std::max(mx, a[i][j]);
          for (int j = 0; j < d; ++j) s += std::exp(a[i][j] - mx);
          for (int j = 0; j < d; ++j) a[i][j] = std::exp(a[i][j] - mx) / s;
        } else {
          for (int j = 0; j < d; ++j) a[i][j] = a[i][j] > 0.0 ? a[i][j] : 0.0;
        }
      }
      for (int i = 0; i < d; ++i) {
        double* o = &out[(std::size_t(b) * c + g * d + i) * hw];
        for (int p = 0; p < hw; ++p) {
          double acc = 0.0;
          for (int j = 0; j < d; ++j) acc += a[i][j] * row(v, b, g * d + j)[p];
          o[p] = acc;
        }
        if (attn != nullptr)
          for (int j = 0; j < d; ++j) (*attn)[((std::size_t(b) * heads + g) * d + i) * d + j] = a[i][j];
      }
    }
  return out;
}

/// 1x1 convolution: out[co] = b[co] + sum_ci W[co][ci] x[ci].
inline Vec conv1x1(const Vec& x, int n, int cin, int hw, const Vec& wt, const Vec& bias, int cout) {
  Vec out(std::size_t(n) * cout * hw, 0.0);
  for (int b = 0; b < n; ++b)
    for (int co = 0; co < cout; ++co)
      for (int p = 0; p < hw; ++p) {
        double acc = bias.empty() ? 0.0 : bias[co];
        for (int ci = 0; ci < cin; ++ci) acc += wt[std::size_t(co) * cin + ci] * x[(std::size_t(b) * cin + ci) * hw + p];
        out[(std::size_t(b) * cout + co) * hw + p] = acc;
      }
  return out;
}

/// Per-channel k x k correlation, zero padding k/2.
inline Vec depthwise(const Vec& x, int n, int c, int h, int w, const Vec& wt, const Vec& bias, int k) {
  Vec out(x.size(), 0.0);
  const int r = k / 2;
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          double acc = bias.empty() ? 0.0 : bias[ch];
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int sy = y + dy - r, sx = xx + dx - r;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              acc += wt[(std::size_t(ch) * k + dy) * k + dx] * x[((std::size_t(b) * c + ch) * h + sy) * w + sx];
            }
          out[((std::size_t(b) * c + ch) * h + y) * w + xx] = acc;
        }
  return out;
}

/// Channel-wise normalization at every pixel (biased variance), then affine.
inline Vec layer_norm(const Vec& x, int n, int c, int hw, const Vec& gain, const Vec& offset, double eps = 1e-5) {
  Vec out(x.size());
  for (int b = 0; b < n; ++b)
    for (int p = 0; p < hw; ++p) {
      double mean = 0.0, var = 0.0;
      for (int ch = 0; ch < c; ++ch) mean += x[(std::size_t(b) * c + ch) * hw + p];
      mean /= c;
      for (int ch = 0; ch < c; ++ch) {
        const double dv = x[(std::size_t(b) * c + ch) * hw + p] - mean;
        var += dv * dv;
      }
      var /= c;
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t i = (std::size_t(b) * c + ch) * hw + p;
        out[i] = (x[i] - mean) / std::sqrt(var + eps) * gain[ch] + offset[ch];
      }
    }
  return out;
}

inline double gelu(double v) {
  const double pi = 3.14159265358979323846;
  return 0.5 * v * (1.0 + std::tanh(std::sqrt(2.0 / pi) * (v + 0.044715 * v * v * v)));
}

struct FfnWeights {
  Vec gain, offset;   // c
  Vec w_in, b_in;     // 2*hidden x c
  Vec w_dw, b_dw;     // 2*hidden x 3 x 3
  Vec w_out, b_out;   // c x hidden
  int hidden = 0;
};

/// x + W_out (gelu(first half) * second half) of dwconv3(W_in layer_norm(x)).
inline Vec gated_ffn(const Vec& x, int n, int c, int h, int w, const FfnWeights& f) {
  const int hw = h * w, e2 = 2 * f.hidden;
  const Vec u = depthwise(conv1x1(layer_norm(x, n, c, hw, f.gain, f.offset), n, c, hw, f.w_in, f.b_in, e2), n, e2,
                          h, w, f.w_dw, f.b_dw, 3);
  Vec gated(std::size_t(n) * f.hidden * hw);
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < f.hidden; ++ch)
      for (int p = 0; p < hw; ++p)
        gated[(std::size_t(b) * f.hidden + ch) * hw + p] = gelu(u[(std::size_t(b) * e2 + ch) * hw + p]) *
                                                           u[(std::size_t(b) * e2 + f.hidden + ch) * hw + p];
  Vec out = conv1x1(gated, n, f.hidden, hw, f.w_out, f.b_out, c);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
  return out;
}

struct GeneratorWeights {
  Vec w_sq, b_sq;    // s x c
  Vec w_sp, b_sp;    // s x 7 x 7
  Vec w_ex, b_ex;    // heads*k*k x s
  int squeezed = 0;
  int taps = 0;      // heads * k * k
};

/// 1x1 (c -> s), depthwise 7x7, 1x1 (s -> heads k k); no nonlinearity.
inline Vec generator(const Vec& y, int n, int c, int h, int w, const GeneratorWeights& g) {
  const int hw = h * w;
  const Vec a = conv1x1(y, n, c, hw, g.w_sq, g.b_sq, g.squeezed);
  const Vec b = depthwise(a, n, g.squeezed, h, w, g.w_sp, g.b_sp, 7);
  return conv1x1(b, n, g.squeezed, hw, g.w_ex, g.b_ex, g.taps);
}

/// Keys cubic convolution kernel with a = -0.5.
inline double keys(double t) {
  t = std::fabs(t);
  if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

/// Direct 4x4 evaluation per output pixel: source coordinate (o + 0.5) in/out - 0.5,
/// neighbours clamped to the border.
inline Vec bicubic(const Vec& in, int w, int h, int ow, int oh) {
  Vec out(std::size_t(ow) * oh);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const double sy = (oy + 0.5) * h / oh - 0.5, sx = (ox + 0.5) * w / ow - 0.5;
      const int y0 = int(std::floor(sy)), x0 = int(std::floor(sx));
      double acc = 0.0;
      for (int j = y0 - 1; j <= y0 + 2; ++j)
        for (int i = x0 - 1; i <= x0 + 2; ++i) {
          const int cy = std::min(std::max(j, 0), h - 1), cx = std::min(std::max(i, 0), w - 1);
          acc += keys(sy - j) * keys(sx - i) * in[std::size_t(cy) * w + cx];
        }
      out[std::size_t(oy) * ow + ox] = acc;
    }
  return out;
}

}  // namespace oracle
