// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dlgsa/autograd.hpp"
#include "dlgsa/kernels.hpp"

namespace dlgsa {

using detail::grad_target;
using detail::record;
using index_t = std::int64_t;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

// Source index of a padded coordinate, or -1 for a zero pad.
index_t pad_source(index_t i, index_t size, PadMode mode) {
  if (i >= 0 && i < size) return i;
  switch (mode) {
    case PadMode::kZero:
      return -1;
    case PadMode::kReflect: {
      const index_t period = 2 * (size - 1);
      if (period == 0) return 0;
      index_t m = ((i % period) + period) % period;
      return m < size ? m : period - m;
    }
    case PadMode::kCircular:
      return ((i % size) + size) % size;
  }
  return -1;
}

template <typename T>
void im2col(const T* in, index_t channels, index_t h, index_t w, index_t kh, index_t kw, int stride,
            int pad, index_t oh, index_t ow, T* cols) {
  for (index_t c = 0; c < channels; ++c) {
    for (index_t ky = 0; ky < kh; ++ky) {
      for (index_t kx = 0; kx < kw; ++kx) {
        T* row = cols + ((c * kh + ky) * kw + kx) * oh * ow;
        for (index_t y = 0; y < oh; ++y) {
          const index_t iy = y * stride + ky - pad;
          T* dst = row + y * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = in + (c * h + iy) * w;
          for (index_t x = 0; x < ow; ++x) {
            const index_t ix = x * stride + kx - pad;
            dst[x] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, index_t channels, index_t h, index_t w, index_t kh, index_t kw, int stride,
            int pad, index_t oh, index_t ow, T* in) {
  for (index_t c = 0; c < channels; ++c) {
    for (index_t ky = 0; ky < kh; ++ky) {
      for (index_t kx = 0; kx < kw; ++kx) {
        const T* row = cols + ((c * kh + ky) * kw + kx) * oh * ow;
        for (index_t y = 0; y < oh; ++y) {
          const index_t iy = y * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          T* dst = in + (c * h + iy) * w;
          const T* src = row + y * ow;
          for (index_t x = 0; x < ow; ++x) {
            const index_t ix = x * stride + kx - pad;
            if (ix >= 0 && ix < w) dst[ix] += src[x];
          }
        }
      }
    }
  }
}

// Shapes compatible under "b broadcasts over the batch axis".
bool batch_broadcastable(const Shape& a, const Shape& b) {
  return a == b || (b.n == 1 && a.c == b.c && a.h == b.h && a.w == b.w);
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary(const Tensor<T>& x, const char* name, Fwd fwd, Bwd bwd) {
  Tensor<T> out(x.shape());
  auto xs = x.data();
  auto os = out.mutable_data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = fwd(xs[i]);
  record(out, name, {&x}, [x, bwd](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    if (gx == nullptr) return;
    auto xs = x.data();
    for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * bwd(xs[i], o.data[i]);
  });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Convolutions

template <typename T>
Tensor<T> pad2d(const Tensor<T>& input, int pad, PadMode mode) {
  if (pad < 0) throw ConfigError("negative pad");
  const Shape s = input.shape();
  if (mode == PadMode::kReflect && pad > 0) {
    require(pad < s.h && pad < s.w, "reflect pad " + std::to_string(pad) + " too large for " + s.str());
  }
  const Shape o{s.n, s.c, s.h + 2 * pad, s.w + 2 * pad};
  Tensor<T> out(o);
  std::vector<index_t> ry(o.h), rx(o.w);
  for (index_t y = 0; y < o.h; ++y) ry[y] = pad_source(y - pad, s.h, mode);
  for (index_t x = 0; x < o.w; ++x) rx[x] = pad_source(x - pad, s.w, mode);
  auto in = input.data();
  auto os = out.mutable_data();
  for (index_t p = 0; p < s.n * s.c; ++p) {
    for (index_t y = 0; y < o.h; ++y) {
      if (ry[y] < 0) continue;
      for (index_t x = 0; x < o.w; ++x) {
        if (rx[x] < 0) continue;
        os[(p * o.h + y) * o.w + x] = in[(p * s.h + ry[y]) * s.w + rx[x]];
      }
    }
  }
  record(out, "pad2d", {&input}, [input, ry, rx, s, o](const detail::TensorImpl<T>& r) {
    T* gx = grad_target(input);
    if (gx == nullptr) return;
    for (index_t p = 0; p < s.n * s.c; ++p)
      for (index_t y = 0; y < o.h; ++y) {
        if (ry[y] < 0) continue;
        for (index_t x = 0; x < o.w; ++x) {
          if (rx[x] < 0) continue;
          gx[(p * s.h + ry[y]) * s.w + rx[x]] += r.grad[(p * o.h + y) * o.w + x];
        }
      }
  });
  return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dOptions& opt) {
  const Shape xs = input.shape();
  const Shape ws = weight.shape();
  if (ws.h % 2 == 0 || ws.w % 2 == 0) {
    throw ConfigError("conv2d kernel must be odd, got " + std::to_string(ws.h) + "x" + std::to_string(ws.w));
  }
  if (opt.stride < 1) throw ConfigError("conv2d stride must be >= 1");
  if (opt.groups < 1) throw ConfigError("conv2d groups must be >= 1");
  if (opt.pad < 0) throw ConfigError("conv2d pad must be >= 0");
  require(xs.c % opt.groups == 0 && ws.n % opt.groups == 0,
          "conv2d channels not divisible by groups " + std::to_string(opt.groups));
  require(ws.c * opt.groups == xs.c,
          "conv2d weight " + ws.str() + " does not match input " + xs.str());
  if (bias.defined()) require(bias.numel() == ws.n, "conv2d bias size does not match cout");

  if (opt.pad_mode != PadMode::kZero && opt.pad > 0) {
    Conv2dOptions inner = opt;
    inner.pad = 0;
    inner.pad_mode = PadMode::kZero;
    return conv2d(pad2d(input, opt.pad, opt.pad_mode), weight, bias, inner);
  }

  const index_t kh = ws.h, kw = ws.w, pad = opt.pad, stride = opt.stride;
  require(xs.h + 2 * pad >= kh && xs.w + 2 * pad >= kw, "conv2d input smaller than kernel");
  const index_t oh = (xs.h + 2 * pad - kh) / stride + 1;
  const index_t ow = (xs.w + 2 * pad - kw) / stride + 1;
  const index_t g = opt.groups;
  const index_t cin_g = xs.c / g, cout_g = ws.n / g;
  const index_t kdim = cin_g * kh * kw, npix = oh * ow;
  const bool direct = kh == 1 && kw == 1 && stride == 1 && pad == 0;

  Tensor<T> out(Shape{xs.n, ws.n, oh, ow});
  const auto& K = kernels::active<T>();
  auto in = input.data();
  auto wt = weight.data();
  auto os = out.mutable_data();
  std::vector<T> cols(direct ? 0 : static_cast<std::size_t>(kdim * npix));
  for (index_t n = 0; n < xs.n; ++n) {
    for (index_t gi = 0; gi < g; ++gi) {
      const T* src = in.data() + (n * xs.c + gi * cin_g) * xs.h * xs.w;
      const T* b = src;
      if (!direct) {
        im2col(src, cin_g, xs.h, xs.w, kh, kw, opt.stride, opt.pad, oh, ow, cols.data());
        b = cols.data();
      }
      T* dst = os.data() + (n * ws.n + gi * cout_g) * npix;
      K.gemm(false, false, cout_g, npix, kdim, wt.data() + gi * cout_g * kdim, b, dst, false);
    }
    if (bias.defined()) {
      auto bs = bias.data();
      for (index_t co = 0; co < ws.n; ++co) {
        T* dst = os.data() + (n * ws.n + co) * npix;
        for (index_t p = 0; p < npix; ++p) dst[p] += bs[co];
      }
    }
  }

  record(out, "conv2d", {&input, &weight, &bias},
         [input, weight, bias, opt, xs, ws, oh, ow, g, cin_g, cout_g, kdim, npix,
          direct](const detail::TensorImpl<T>& o) {
           const auto& K = kernels::active<T>();
           T* gx = grad_target(input);
           T* gw = grad_target(weight);
           T* gb = grad_target(bias);
           auto in = input.data();
           auto wt = weight.data();
           std::vector<T> cols(direct ? 0 : static_cast<std::size_t>(kdim * npix));
           std::vector<T> dcols(direct ? 0 : static_cast<std::size_t>(kdim * npix));
           for (index_t n = 0; n < xs.n; ++n) {
             for (index_t gi = 0; gi < g; ++gi) {
               const T* gout = o.grad.data() + (n * ws.n + gi * cout_g) * npix;
               const T* src = in.data() + (n * xs.c + gi * cin_g) * xs.h * xs.w;
               if (gw != nullptr) {
                 const T* b = src;
                 if (!direct) {
                   im2col(src, cin_g, xs.h, xs.w, ws.h, ws.w, opt.stride, opt.pad, oh, ow, cols.data());
                   b = cols.data();
                 }
                 K.gemm(false, true, cout_g, kdim, npix, gout, b, gw + gi * cout_g * kdim, true);
               }
               if (gx != nullptr) {
                 T* dst = gx + (n * xs.c + gi * cin_g) * xs.h * xs.w;
                 if (direct) {
                   K.gemm(true, false, kdim, npix, cout_g, wt.data() + gi * cout_g * kdim, gout, dst, true);
                 } else {
                   K.gemm(true, false, kdim, npix, cout_g, wt.data() + gi * cout_g * kdim, gout,
                          dcols.data(), false);
                   col2im(dcols.data(), cin_g, xs.h, xs.w, ws.h, ws.w, opt.stride, opt.pad, oh, ow, dst);
                 }
               }
             }
             if (gb != nullptr) {
               for (index_t co = 0; co < ws.n; ++co) {
                 const T* gout = o.grad.data() + (n * ws.n + co) * npix;
                 T acc = T(0);
                 for (index_t p = 0; p < npix; ++p) acc += gout[p];
                 gb[co] += acc;
               }
             }
           }
         });
  return out;
}

template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           PadMode pad_mode) {
  const Shape xs = input.shape();
  const Shape ws = weight.shape();
  require(ws.n == xs.c && ws.c == 1,
          "depthwise weight " + ws.str() + " does not match input " + xs.str());
  if (ws.h != ws.w || ws.h % 2 == 0) throw ConfigError("depthwise kernel must be square and odd");
  if (bias.defined()) require(bias.numel() == xs.c, "depthwise bias size does not match channels");
  const index_t k = ws.h;
  if (pad_mode != PadMode::kZero) {
    // Explicit padding followed by a valid correlation keeps the size.
    const Tensor<T> padded = pad2d(input, static_cast<int>(k / 2), pad_mode);
    const Shape ps = padded.shape();
    Tensor<T> out(xs);
    const kernels::PlaneConv geom{ps.h, ps.w, xs.h, xs.w, k, 0};
    const auto& K = kernels::active<T>();
    auto in = padded.data();
    auto wt = weight.data();
    auto os = out.mutable_data();
    for (index_t n = 0; n < xs.n; ++n)
      for (index_t c = 0; c < xs.c; ++c) {
        T* dst = os.data() + (n * xs.c + c) * xs.plane();
        K.plane_conv_forward(geom, in.data() + (n * xs.c + c) * ps.plane(), wt.data() + c * k * k, dst);
        if (bias.defined()) {
          const T bv = bias.data()[c];
          for (index_t p = 0; p < xs.plane(); ++p) dst[p] += bv;
        }
      }
    record(out, "depthwise_conv2d", {&padded, &weight, &bias},
           [padded, weight, bias, geom, xs, ps, k](const detail::TensorImpl<T>& o) {
             const auto& K = kernels::active<T>();
             T* gx = grad_target(padded);
             T* gw = grad_target(weight);
             T* gb = grad_target(bias);
             for (index_t n = 0; n < xs.n; ++n)
               for (index_t c = 0; c < xs.c; ++c) {
                 const T* gout = o.grad.data() + (n * xs.c + c) * xs.plane();
                 if (gx != nullptr)
                   K.plane_conv_backward_input(geom, gout, weight.data().data() + c * k * k,
                                               gx + (n * xs.c + c) * ps.plane());
                 if (gw != nullptr)
                   K.plane_conv_backward_kernel(geom, gout, padded.data().data() + (n * xs.c + c) * ps.plane(),
                                                gw + c * k * k);
                 if (gb != nullptr)
                   for (index_t p = 0; p < xs.plane(); ++p) gb[c] += gout[p];
               }
           });
    return out;
  }

  Tensor<T> out(xs);
  const kernels::PlaneConv geom{xs.h, xs.w, xs.h, xs.w, k, k / 2};
  const auto& K = kernels::active<T>();
  auto in = input.data();
  auto wt = weight.data();
  auto os = out.mutable_data();
  for (index_t n = 0; n < xs.n; ++n)
    for (index_t c = 0; c < xs.c; ++c) {
      T* dst = os.data() + (n * xs.c + c) * xs.plane();
      K.plane_conv_forward(geom, in.data() + (n * xs.c + c) * xs.plane(), wt.data() + c * k * k, dst);
      if (bias.defined()) {
        const T bv = bias.data()[c];
        for (index_t p = 0; p < xs.plane(); ++p) dst[p] += bv;
      }
    }
  record(out, "depthwise_conv2d", {&input, &weight, &bias},
         [input, weight, bias, geom, xs, k](const detail::TensorImpl<T>& o) {
           const auto& K = kernels::active<T>();
           T* gx = grad_target(input);
           T* gw = grad_target(weight);
           T* gb = grad_target(bias);
           for (index_t n = 0; n < xs.n; ++n)
             for (index_t c = 0; c < xs.c; ++c) {
               const index_t off = (n * xs.c + c) * xs.plane();
               const T* gout = o.grad.data() + off;
               if (gx != nullptr) K.plane_conv_backward_input(geom, gout, weight.data().data() + c * k * k, gx + off);
               if (gw != nullptr) K.plane_conv_backward_kernel(geom, gout, input.data().data() + off, gw + c * k * k);
               if (gb != nullptr)
                 for (index_t p = 0; p < xs.plane(); ++p) gb[c] += gout[p];
             }
         });
  return out;
}

// ---------------------------------------------------------------------------
// Normalization and rearrangement

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gain, const Tensor<T>& offset, T eps) {
  if (!(eps > T(0))) throw ConfigError("layer_norm eps must be > 0");
  const Shape s = input.shape();
  require(gain.numel() == s.c && offset.numel() == s.c, "layer_norm affine size does not match channels");
  const index_t plane = s.plane();
  Tensor<T> out(s);
  std::vector<T> normalized(static_cast<std::size_t>(s.numel()));
  std::vector<T> rstd(static_cast<std::size_t>(s.n * plane));
  auto in = input.data();
  auto g = gain.data();
  auto b = offset.data();
  auto os = out.mutable_data();
  std::vector<T> mu(plane), var(plane);
  for (index_t n = 0; n < s.n; ++n) {
    const T* x = in.data() + n * s.c * plane;
    std::fill(mu.begin(), mu.end(), T(0));
    std::fill(var.begin(), var.end(), T(0));
    for (index_t c = 0; c < s.c; ++c)
      for (index_t p = 0; p < plane; ++p) mu[p] += x[c * plane + p];
    for (index_t p = 0; p < plane; ++p) mu[p] /= T(s.c);
    for (index_t c = 0; c < s.c; ++c)
      for (index_t p = 0; p < plane; ++p) {
        const T d = x[c * plane + p] - mu[p];
        var[p] += d * d;
      }
    T* r = rstd.data() + n * plane;
    for (index_t p = 0; p < plane; ++p) r[p] = T(1) / std::sqrt(var[p] / T(s.c) + eps);
    T* xh = normalized.data() + n * s.c * plane;
    T* y = os.data() + n * s.c * plane;
    for (index_t c = 0; c < s.c; ++c)
      for (index_t p = 0; p < plane; ++p) {
        const T v = (x[c * plane + p] - mu[p]) * r[p];
        xh[c * plane + p] = v;
        y[c * plane + p] = v * g[c] + b[c];
      }
  }
  record(out, "layer_norm", {&input, &gain, &offset},
         [input, gain, offset, s, plane, normalized = std::move(normalized),
          rstd = std::move(rstd)](const detail::TensorImpl<T>& o) {
           T* gx = grad_target(input);
           T* gg = grad_target(gain);
           T* gb = grad_target(offset);
           auto g = gain.data();
           std::vector<T> m1(plane), m2(plane);
           for (index_t n = 0; n < s.n; ++n) {
             const T* dy = o.grad.data() + n * s.c * plane;
             const T* xh = normalized.data() + n * s.c * plane;
             if (gg != nullptr || gb != nullptr) {
               for (index_t c = 0; c < s.c; ++c) {
                 T ag = T(0), ab = T(0);
                 for (index_t p = 0; p < plane; ++p) {
                   ag += dy[c * plane + p] * xh[c * plane + p];
                   ab += dy[c * plane + p];
                 }
                 if (gg != nullptr) gg[c] += ag;
                 if (gb != nullptr) gb[c] += ab;
               }
             }
             if (gx == nullptr) continue;
             std::fill(m1.begin(), m1.end(), T(0));
             std::fill(m2.begin(), m2.end(), T(0));
             for (index_t c = 0; c < s.c; ++c)
               for (index_t p = 0; p < plane; ++p) {
                 const T d = dy[c * plane + p] * g[c];
                 m1[p] += d;
                 m2[p] += d * xh[c * plane + p];
               }
             const T inv_c = T(1) / T(s.c);
             const T* r = rstd.data() + n * plane;
             T* dx = gx + n * s.c * plane;
             for (index_t c = 0; c < s.c; ++c)
               for (index_t p = 0; p < plane; ++p) {
                 const T d = dy[c * plane + p] * g[c];
                 dx[c * plane + p] += r[p] * (d - m1[p] * inv_c - xh[c * plane + p] * m2[p] * inv_c);
               }
           }
         });
  return out;
}

namespace {

// Index map shared by pixel_shuffle and its inverse: position in the
// low-resolution [n, c*r*r, h, w] layout for each high-resolution element.
std::vector<index_t> shuffle_map(const Shape& lo, int r) {
  const index_t c = lo.c / (r * r);
  const index_t oh = lo.h * r, ow = lo.w * r;
  std::vector<index_t> map(static_cast<std::size_t>(lo.numel()));
  std::size_t k = 0;
  for (index_t n = 0; n < lo.n; ++n)
    for (index_t ch = 0; ch < c; ++ch)
      for (index_t y = 0; y < oh; ++y)
        for (index_t x = 0; x < ow; ++x) {
          const index_t src_c = ch * r * r + (y % r) * r + (x % r);
          map[k++] = ((n * lo.c + src_c) * lo.h + y / r) * lo.w + x / r;
        }
  return map;
}

}  // namespace

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& input, int r) {
  if (r < 1) throw ConfigError("pixel_shuffle factor must be >= 1");
  const Shape s = input.shape();
  require(s.c % (r * r) == 0, "pixel_shuffle: channels " + std::to_string(s.c) + " not divisible by " +
                                  std::to_string(r * r));
  Tensor<T> out(Shape{s.n, s.c / (r * r), s.h * r, s.w * r});
  auto map = shuffle_map(s, r);
  auto in = input.data();
  auto os = out.mutable_data();
  for (std::size_t i = 0; i < map.size(); ++i) os[i] = in[map[i]];
  record(out, "pixel_shuffle", {&input}, [input, map = std::move(map)](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(input);
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < map.size(); ++i) gx[map[i]] += o.grad[i];
  });
  return out;
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& input, int r) {
  if (r < 1) throw ConfigError("pixel_unshuffle factor must be >= 1");
  const Shape s = input.shape();
  require(s.h % r == 0 && s.w % r == 0, "pixel_unshuffle: spatial size not divisible by factor");
  const Shape lo{s.n, s.c * r * r, s.h / r, s.w / r};
  Tensor<T> out(lo);
  auto map = shuffle_map(lo, r);
  auto in = input.data();
  auto os = out.mutable_data();
  for (std::size_t i = 0; i < map.size(); ++i) os[map[i]] = in[i];
  record(out, "pixel_unshuffle", {&input}, [input, map = std::move(map)](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(input);
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < map.size(); ++i) gx[i] += o.grad[map[i]];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Matrix products

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b) {
  const Shape as = a.shape(), bs = b.shape();
  require(as.c == bs.c && (as.n == bs.n || bs.n == 1),
          "matmul batch extents differ: " + as.str() + " vs " + bs.str());
  const index_t m = trans_a ? as.w : as.h;
  const index_t ka = trans_a ? as.h : as.w;
  const index_t kb = trans_b ? bs.w : bs.h;
  const index_t nn = trans_b ? bs.h : bs.w;
  require(ka == kb, "matmul inner dimensions differ: " + as.str() + " vs " + bs.str());
  const bool shared_b = bs.n == 1 && as.n > 1;
  const index_t batches = as.n * as.c;
  Tensor<T> out(Shape{as.n, as.c, m, nn});
  const auto& K = kernels::active<T>();
  auto ad = a.data();
  auto bd = b.data();
  auto od = out.mutable_data();
  const index_t a_sz = as.h * as.w, b_sz = bs.h * bs.w, o_sz = m * nn;
  for (index_t i = 0; i < batches; ++i) {
    const index_t bi = shared_b ? i % as.c : i;
    K.gemm(trans_a, trans_b, m, nn, ka, ad.data() + i * a_sz, bd.data() + bi * b_sz, od.data() + i * o_sz,
           false);
  }
  record(out, "matmul", {&a, &b},
         [a, b, trans_a, trans_b, m, nn, ka, batches, shared_b, a_sz, b_sz, o_sz,
          cb = as.c](const detail::TensorImpl<T>& o) {
           const auto& K = kernels::active<T>();
           T* ga = grad_target(a);
           T* gb = grad_target(b);
           auto ad = a.data();
           auto bd = b.data();
           for (index_t i = 0; i < batches; ++i) {
             const index_t bi = shared_b ? i % cb : i;
             const T* dc = o.grad.data() + i * o_sz;
             const T* ap = ad.data() + i * a_sz;
             const T* bp = bd.data() + bi * b_sz;
             if (ga != nullptr) {
               if (!trans_a) K.gemm(false, !trans_b, m, ka, nn, dc, bp, ga + i * a_sz, true);
               else K.gemm(trans_b, true, ka, m, nn, bp, dc, ga + i * a_sz, true);
             }
             if (gb != nullptr) {
               if (!trans_b) K.gemm(!trans_a, false, ka, nn, m, ap, dc, gb + bi * b_sz, true);
               else K.gemm(true, trans_a, nn, ka, m, dc, ap, gb + bi * b_sz, true);
             }
           }
         });
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const auto& K = kernels::active<T>();
  K.gelu_forward(x.numel(), x.data().data(), out.mutable_data().data());
  record(out, "gelu", {&x}, [x](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    if (gx == nullptr) return;
    kernels::active<T>().gelu_backward(x.numel(), x.data().data(), o.grad.data(), gx);
  });
  return out;
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  return unary(
      x, "exp", [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return unary(
      x, "scale", [s](T v) { return v * s; }, [s](T, T) { return s; });
}

namespace {

enum class Binary { kAdd, kSub, kMul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, Binary kind, const char* name) {
  require(batch_broadcastable(a.shape(), b.shape()),
          std::string(name) + ": shapes " + a.shape().str() + " and " + b.shape().str() + " are incompatible");
  Tensor<T> out(a.shape());
  auto ad = a.data();
  auto bd = b.data();
  auto od = out.mutable_data();
  const std::size_t bn = bd.size();
  if (bn == 0) return out;
  for (std::size_t base = 0; base < od.size(); base += bn) {
    const T* x = ad.data() + base;
    T* y = od.data() + base;
    const T* z = bd.data();
    switch (kind) {
      case Binary::kAdd:
        for (std::size_t i = 0; i < bn; ++i) y[i] = x[i] + z[i];
        break;
      case Binary::kSub:
        for (std::size_t i = 0; i < bn; ++i) y[i] = x[i] - z[i];
        break;
      case Binary::kMul:
        for (std::size_t i = 0; i < bn; ++i) y[i] = x[i] * z[i];
        break;
    }
  }
  record(out, name, {&a, &b}, [a, b, kind, bn](const detail::TensorImpl<T>& o) {
    T* ga = grad_target(a);
    T* gb = grad_target(b);
    const T* ad = a.data().data();
    const T* bd = b.data().data();
    for (std::size_t base = 0; base < o.grad.size(); base += bn) {
      const T* g = o.grad.data() + base;
      if (ga != nullptr) {
        T* d = ga + base;
        if (kind == Binary::kMul) {
          for (std::size_t i = 0; i < bn; ++i) d[i] += g[i] * bd[i];
        } else {
          for (std::size_t i = 0; i < bn; ++i) d[i] += g[i];
        }
      }
      if (gb != nullptr) {
        if (kind == Binary::kMul) {
          const T* x = ad + base;
          for (std::size_t i = 0; i < bn; ++i) gb[i] += g[i] * x[i];
        } else if (kind == Binary::kAdd) {
          for (std::size_t i = 0; i < bn; ++i) gb[i] += g[i];
        } else {
          for (std::size_t i = 0; i < bn; ++i) gb[i] -= g[i];
        }
      }
    }
  });
  return out;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::kAdd, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::kSub, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::kMul, "mul");
}

template <typename T>
Tensor<T> channel_scale(const Tensor<T>& x, const Tensor<T>& s) {
  const Shape xs = x.shape();
  require(s.numel() == xs.c, "channel_scale: need " + std::to_string(xs.c) + " factors");
  Tensor<T> out(xs);
  auto xd = x.data();
  auto sd = s.data();
  auto od = out.mutable_data();
  const index_t plane = xs.plane();
  for (index_t n = 0; n < xs.n; ++n)
    for (index_t c = 0; c < xs.c; ++c)
      for (index_t p = 0; p < plane; ++p) {
        const index_t i = (n * xs.c + c) * plane + p;
        od[i] = xd[i] * sd[c];
      }
  record(out, "channel_scale", {&x, &s}, [x, s, xs, plane](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    T* gs = grad_target(s);
    auto xd = x.data();
    auto sd = s.data();
    for (index_t n = 0; n < xs.n; ++n)
      for (index_t c = 0; c < xs.c; ++c) {
        T acc = T(0);
        for (index_t p = 0; p < plane; ++p) {
          const index_t i = (n * xs.c + c) * plane + p;
          if (gx) gx[i] += o.grad[i] * sd[c];
          acc += o.grad[i] * xd[i];
        }
        if (gs) gs[c] += acc;
      }
  });
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.data()) acc += v;
  Tensor<T> out = Tensor<T>::scalar(acc);
  record(out, "sum", {&x}, [x](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    if (gx == nullptr) return;
    const T g = o.grad[0];
    for (index_t i = 0; i < x.numel(); ++i) gx[i] += g;
  });
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  require(x.numel() > 0, "mean of an empty tensor");
  return scale(sum(x), T(1) / T(x.numel()));
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  const Shape s = x.shape();
  Tensor<T> out(s);
  auto xd = x.data();
  auto od = out.mutable_data();
  const index_t rows = s.n * s.c * s.h;
  for (index_t r = 0; r < rows; ++r) {
    const T* xr = xd.data() + r * s.w;
    T* yr = od.data() + r * s.w;
    T mx = *std::max_element(xr, xr + s.w);
    T z = T(0);
    for (index_t j = 0; j < s.w; ++j) z += (yr[j] = std::exp(xr[j] - mx));
    for (index_t j = 0; j < s.w; ++j) yr[j] /= z;
  }
  record(out, "softmax", {&x}, [x, rows, w = s.w](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    if (gx == nullptr) return;
    for (index_t r = 0; r < rows; ++r) {
      const T* y = o.data.data() + r * w;
      const T* dy = o.grad.data() + r * w;
      T dot = T(0);
      for (index_t j = 0; j < w; ++j) dot += y[j] * dy[j];
      for (index_t j = 0; j < w; ++j) gx[r * w + j] += y[j] * (dy[j] - dot);
    }
  });
  return out;
}

template <typename T>
Tensor<T> l2_normalize_lastdim(const Tensor<T>& x, T eps) {
  const Shape s = x.shape();
  Tensor<T> out(s);
  auto xd = x.data();
  auto od = out.mutable_data();
  const index_t rows = s.n * s.c * s.h;
  std::vector<T> denom(static_cast<std::size_t>(rows));
  for (index_t r = 0; r < rows; ++r) {
    const T* xr = xd.data() + r * s.w;
    T ss = T(0);
    for (index_t j = 0; j < s.w; ++j) ss += xr[j] * xr[j];
    denom[r] = std::max(std::sqrt(ss), eps);
    for (index_t j = 0; j < s.w; ++j) od[r * s.w + j] = xr[j] / denom[r];
  }
  record(out, "l2_normalize", {&x}, [x, rows, eps, w = s.w, denom = std::move(denom)](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    if (gx == nullptr) return;
    for (index_t r = 0; r < rows; ++r) {
      const T* y = o.data.data() + r * w;
      const T* dy = o.grad.data() + r * w;
      if (denom[r] > eps) {
        T dot = T(0);
        for (index_t j = 0; j < w; ++j) dot += y[j] * dy[j];
        for (index_t j = 0; j < w; ++j) gx[r * w + j] += (dy[j] - y[j] * dot) / denom[r];
      } else {
        for (index_t j = 0; j < w; ++j) gx[r * w + j] += dy[j] / eps;
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Layout

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(shape.numel() == x.numel(), "reshape " + x.shape().str() + " -> " + shape.str());
  Tensor<T> out(shape, std::vector<T>(x.data().begin(), x.data().end()));
  record(out, "reshape", {&x}, [x](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i];
  });
  return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t begin, std::int64_t count) {
  const Shape s = x.shape();
  require(begin >= 0 && count >= 0 && begin + count <= s.c, "slice_channels out of range for " + s.str());
  Tensor<T> out(Shape{s.n, count, s.h, s.w});
  auto xd = x.data();
  auto od = out.mutable_data();
  const index_t plane = s.plane();
  for (index_t n = 0; n < s.n; ++n)
    std::copy_n(xd.data() + (n * s.c + begin) * plane, count * plane, od.data() + n * count * plane);
  record(out, "slice_channels", {&x}, [x, s, begin, count, plane](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    if (gx == nullptr) return;
    for (index_t n = 0; n < s.n; ++n) {
      T* dst = gx + (n * s.c + begin) * plane;
      const T* src = o.grad.data() + n * count * plane;
      for (index_t i = 0; i < count * plane; ++i) dst[i] += src[i];
    }
  });
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  require(!parts.empty(), "concat_channels of nothing");
  Shape s = parts.front().shape();
  s.c = 0;
  for (const auto& p : parts) {
    const Shape ps = p.shape();
    require(ps.n == s.n && ps.h == s.h && ps.w == s.w, "concat_channels: mismatched " + ps.str());
    s.c += ps.c;
  }
  Tensor<T> out(s);
  auto od = out.mutable_data();
  const index_t plane = s.plane();
  index_t c0 = 0;
  for (const auto& p : parts) {
    const index_t pc = p.shape().c;
    for (index_t n = 0; n < s.n; ++n)
      std::copy_n(p.data().data() + n * pc * plane, pc * plane, od.data() + (n * s.c + c0) * plane);
    c0 += pc;
  }
  auto node_parts = parts;
  if (grad_enabled()) {
    bool any = false;
    for (const auto& p : parts) any = any || p.requires_grad();
    if (any) {
      auto node = std::make_shared<detail::Node<T>>();
      node->name = "concat_channels";
      for (const auto& p : parts) node->inputs.push_back(p.impl());
      node->backward = [node_parts, s, plane](const detail::TensorImpl<T>& o) {
        index_t c0 = 0;
        for (const auto& p : node_parts) {
          const index_t pc = p.shape().c;
          if (T* gp = grad_target(p)) {
            for (index_t n = 0; n < s.n; ++n) {
              const T* src = o.grad.data() + (n * s.c + c0) * plane;
              for (index_t i = 0; i < pc * plane; ++i) gp[n * pc * plane + i] += src[i];
            }
          }
          c0 += pc;
        }
      };
      out.impl()->requires_grad = true;
      out.impl()->creator = std::move(node);
    }
  }
  return out;
}

namespace {

// For each element of the windowed layout, its index in the image layout.
std::vector<index_t> window_map(const Shape& img, int win) {
  const index_t wy = img.h / win, wx = img.w / win;
  std::vector<index_t> map(static_cast<std::size_t>(img.numel()));
  std::size_t k = 0;
  for (index_t n = 0; n < img.n; ++n)
    for (index_t by = 0; by < wy; ++by)
      for (index_t bx = 0; bx < wx; ++bx)
        for (index_t c = 0; c < img.c; ++c)
          for (index_t y = 0; y < win; ++y)
            for (index_t x = 0; x < win; ++x)
              map[k++] = ((n * img.c + c) * img.h + by * win + y) * img.w + bx * win + x;
  return map;
}

}  // namespace

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, int win) {
  const Shape s = x.shape();
  if (win < 1) throw ConfigError("window size must be >= 1");
  require(s.h % win == 0 && s.w % win == 0, "window_partition: " + s.str() + " not divisible by " +
                                                std::to_string(win));
  Tensor<T> out(Shape{s.n * (s.h / win) * (s.w / win), s.c, win, win});
  auto map = window_map(s, win);
  auto xd = x.data();
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < map.size(); ++i) od[i] = xd[map[i]];
  record(out, "window_partition", {&x}, [x, map = std::move(map)](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(x);
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < map.size(); ++i) gx[map[i]] += o.grad[i];
  });
  return out;
}

template <typename T>
Tensor<T> window_merge(const Tensor<T>& windows, std::int64_t h, std::int64_t w) {
  const Shape s = windows.shape();
  require(s.h == s.w && s.h > 0 && h % s.h == 0 && w % s.w == 0, "window_merge: bad window shape " + s.str());
  const index_t per_image = (h / s.h) * (w / s.w);
  require(s.n % per_image == 0, "window_merge: window count does not tile the image");
  const Shape img{s.n / per_image, s.c, h, w};
  Tensor<T> out(img);
  auto map = window_map(img, static_cast<int>(s.h));
  auto xd = windows.data();
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < map.size(); ++i) od[map[i]] = xd[i];
  record(out, "window_merge", {&windows}, [windows, map = std::move(map)](const detail::TensorImpl<T>& o) {
    T* gx = grad_target(windows);
    if (gx == nullptr) return;
    for (std::size_t i = 0; i < map.size(); ++i) gx[i] += o.grad[map[i]];
  });
  return out;
}

template <typename T>
void check_finite(const Tensor<T>& x, const char* where) {
  for (T v : x.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + where);
  }
}

#define DLGSA_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                 \
                            const Conv2dOptions&);                                                \
  template Tensor<T> depthwise_conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                      PadMode);                                                   \
  template Tensor<T> pad2d(const Tensor<T>&, int, PadMode);                                       \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);         \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, int);                                        \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, int);                                      \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool, bool);                      \
  template Tensor<T> relu(const Tensor<T>&);                                                      \
  template Tensor<T> gelu(const Tensor<T>&);                                                      \
  template Tensor<T> exp(const Tensor<T>&);                                                       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> scale(const Tensor<T>&, T);                                                  \
  template Tensor<T> channel_scale(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> sum(const Tensor<T>&);                                                       \
  template Tensor<T> mean(const Tensor<T>&);                                                      \
  template Tensor<T> softmax_lastdim(const Tensor<T>&);                                           \
  template Tensor<T> l2_normalize_lastdim(const Tensor<T>&, T);                                   \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                            \
  template Tensor<T> slice_channels(const Tensor<T>&, std::int64_t, std::int64_t);                \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);                              \
  template Tensor<T> window_partition(const Tensor<T>&, int);                                     \
  template Tensor<T> window_merge(const Tensor<T>&, std::int64_t, std::int64_t);                  \
  template void check_finite(const Tensor<T>&, const char*);

DLGSA_INSTANTIATE_OPS(float)
DLGSA_INSTANTIATE_OPS(double)

}  // namespace dlgsa
