// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/mhdlsa.hpp"

#include <cmath>

#include "dlgsa/autograd.hpp"
#include "dlgsa/kernels.hpp"

namespace dlgsa {

std::int64_t ffn_hidden_channels(std::int64_t c, double ratio) {
  if (!(ratio > 0.0)) throw ConfigError("ffn_ratio must be > 0");
  const auto h = static_cast<std::int64_t>(std::floor(static_cast<double>(c) * ratio + 1e-9));
  if (h < 1) throw ConfigError("ffn_ratio gives an empty hidden layer");
  return h;
}

std::int64_t squeezed_channels(std::int64_t c, double gamma) {
  const double v = gamma * static_cast<double>(c);
  const double r = std::round(v);
  if (!(gamma > 0.0) || std::fabs(v - r) > 1e-9 || r < 1.0) {
    throw ConfigError("gamma: gamma * channels = " + std::to_string(v) + " is not a positive integer");
  }
  return static_cast<std::int64_t>(r);
}

template <typename T>
GatedFfn<T> GatedFfn<T>::make(ParamStore<T>& store, const std::string& name, std::int64_t c, double ratio,
                              PadMode pad_mode) {
  GatedFfn f;
  f.hidden = ffn_hidden_channels(c, ratio);
  f.norm = LayerNorm<T>::make(store, name + ".norm", c);
  f.proj_in = Conv2d<T>::make(store, name + ".proj_in", c, 2 * f.hidden, 1, Init::kTruncNormal);
  f.spatial = DepthwiseConv2d<T>::make(store, name + ".spatial", 2 * f.hidden, 3, Init::kFanInUniform, pad_mode);
  f.proj_out = Conv2d<T>::make(store, name + ".proj_out", f.hidden, c, 1, Init::kZeros);
  return f;
}

template <typename T>
Tensor<T> gated_ffn(const Tensor<T>& x, const GatedFfn<T>& f) {
  const Tensor<T> u = f.spatial(f.proj_in(f.norm(x)));
  const Tensor<T> gate = gelu(slice_channels(u, 0, f.hidden));
  const Tensor<T> value = slice_channels(u, f.hidden, f.hidden);
  return add(x, f.proj_out(mul(gate, value)));
}

template <typename T>
MhdlsaParams<T> MhdlsaParams<T>::make(ParamStore<T>& store, const std::string& name, const MhdlsaConfig& cfg) {
  if (cfg.channels < 1 || cfg.heads < 1 || cfg.channels % cfg.heads != 0) {
    throw ConfigError("heads: channels " + std::to_string(cfg.channels) + " not divisible by heads " +
                      std::to_string(cfg.heads));
  }
  if (cfg.k < 1 || cfg.k % 2 == 0) throw ConfigError("k: dynamic kernel size must be odd, got " + std::to_string(cfg.k));
  const std::int64_t sq = squeezed_channels(cfg.channels, cfg.gamma);
  MhdlsaParams p;
  p.cfg = cfg;
  p.norm = LayerNorm<T>::make(store, name + ".norm", cfg.channels);
  p.proj = Conv2d<T>::make(store, name + ".proj", cfg.channels, cfg.channels, 1, Init::kTruncNormal);
  p.gen_squeeze = Conv2d<T>::make(store, name + ".gen_squeeze", cfg.channels, sq, 1, Init::kTruncNormal);
  p.gen_spatial = DepthwiseConv2d<T>::make(store, name + ".gen_spatial", sq, 7, Init::kFanInUniform, cfg.pad_mode);
  p.gen_expand = Conv2d<T>::make(store, name + ".gen_expand", sq, cfg.heads * cfg.k * cfg.k, 1, Init::kZeros);
  p.ffn = GatedFfn<T>::make(store, name + ".ffn", cfg.channels, cfg.ffn_ratio, cfg.pad_mode);
  return p;
}

template <typename T>
Tensor<T> generate_dynamic_weights(const Tensor<T>& y_in, const MhdlsaParams<T>& p) {
  return p.gen_expand(p.gen_spatial(p.gen_squeeze(y_in)));
}

namespace {

// Circular-extension variant; only used for equivariance checks, so plain loops.
template <typename T>
void circular_forward(const Shape& s, std::int64_t heads, int k, const T* field, const T* in, T* out) {
  const std::int64_t cg = s.c / heads, half = k / 2;
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < s.h; ++y)
        for (std::int64_t x = 0; x < s.w; ++x) {
          T acc = T(0);
          for (int t = 0; t < k * k; ++t) {
            const std::int64_t sy = ((y + t / k - half) % s.h + s.h) % s.h;
            const std::int64_t sx = ((x + t % k - half) % s.w + s.w) % s.w;
            acc += field[(((n * heads + c / cg) * k * k + t) * s.h + y) * s.w + x] *
                   in[((n * s.c + c) * s.h + sy) * s.w + sx];
          }
          out[((n * s.c + c) * s.h + y) * s.w + x] = acc;
        }
}

template <typename T>
void circular_backward(const Shape& s, std::int64_t heads, int k, const T* field, const T* in, const T* gout,
                       T* gfield, T* gin) {
  const std::int64_t cg = s.c / heads, half = k / 2;
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < s.h; ++y)
        for (std::int64_t x = 0; x < s.w; ++x) {
          const T g = gout[((n * s.c + c) * s.h + y) * s.w + x];
          for (int t = 0; t < k * k; ++t) {
            const std::int64_t sy = ((y + t / k - half) % s.h + s.h) % s.h;
            const std::int64_t sx = ((x + t % k - half) % s.w + s.w) % s.w;
            const std::int64_t fi = (((n * heads + c / cg) * k * k + t) * s.h + y) * s.w + x;
            const std::int64_t ii = ((n * s.c + c) * s.h + sy) * s.w + sx;
            if (gfield) gfield[fi] += g * in[ii];
            if (gin) gin[ii] += g * field[fi];
          }
        }
}

}  // namespace

template <typename T>
Tensor<T> dynamic_local_aggregate(const Tensor<T>& field, const Tensor<T>& y_in, std::int64_t heads, int k,
                                  PadMode pad_mode) {
  const Shape s = y_in.shape();
  const Shape fs = field.shape();
  if (heads < 1 || s.c % heads != 0) throw DimensionError("dynamic_local_aggregate: channels not divisible by heads");
  if (fs.n != s.n || fs.c != heads * k * k || fs.h != s.h || fs.w != s.w) {
    throw DimensionError("dynamic_local_aggregate: kernel field " + fs.str() + " does not match features " +
                         s.str() + " with " + std::to_string(heads) + " heads of " + std::to_string(k) + "x" +
                         std::to_string(k));
  }
  if (pad_mode == PadMode::kReflect) throw ConfigError("dynamic_local_aggregate supports zero or circular extension");
  const std::int64_t cg = s.c / heads, plane = s.plane(), taps = std::int64_t(k) * k;
  const kernels::DynamicGeom geom{s.h, s.w, k, cg};
  const bool circular = pad_mode == PadMode::kCircular;

  Tensor<T> out(s);
  auto od = out.mutable_data();
  if (circular) {
    circular_forward(s, heads, k, field.data().data(), y_in.data().data(), od.data());
  } else {
    const auto& K = kernels::active<T>();
    for (std::int64_t n = 0; n < s.n; ++n)
      for (std::int64_t g = 0; g < heads; ++g)
        K.dynamic_forward(geom, field.data().data() + (n * heads + g) * taps * plane,
                          y_in.data().data() + (n * s.c + g * cg) * plane, od.data() + (n * s.c + g * cg) * plane);
  }

  detail::record(out, "dynamic_local_aggregate", {&field, &y_in},
                 [field, y_in, s, heads, k, cg, plane, taps, geom, circular](const detail::TensorImpl<T>& o) {
                   T* gf = detail::grad_target(field);
                   T* gy = detail::grad_target(y_in);
                   if (circular) {
                     circular_backward(s, heads, k, field.data().data(), y_in.data().data(), o.grad.data(), gf, gy);
                     return;
                   }
                   const auto& K = kernels::active<T>();
                   for (std::int64_t n = 0; n < s.n; ++n)
                     for (std::int64_t g = 0; g < heads; ++g) {
                       const std::int64_t fo = (n * heads + g) * taps * plane;
                       const std::int64_t yo = (n * s.c + g * cg) * plane;
                       K.dynamic_backward(geom, field.data().data() + fo, y_in.data().data() + yo, o.grad.data() + yo,
                                          gf ? gf + fo : nullptr, gy ? gy + yo : nullptr);
                     }
                 });
  return out;
}

template <typename T>
Tensor<T> mhdlsa_block(const Tensor<T>& x, const MhdlsaParams<T>& p) {
  const Tensor<T> y_in = p.proj(p.norm(x));
  const Tensor<T> field = generate_dynamic_weights(y_in, p);
  const Tensor<T> local = dynamic_local_aggregate(field, y_in, p.cfg.heads, p.cfg.k, p.cfg.pad_mode);
  return gated_ffn(add(x, local), p.ffn);
}

#define DLGSA_INSTANTIATE_MHDLSA(T)                                                                 \
  template struct GatedFfn<T>;                                                                      \
  template struct MhdlsaParams<T>;                                                                  \
  template Tensor<T> gated_ffn(const Tensor<T>&, const GatedFfn<T>&);                               \
  template Tensor<T> generate_dynamic_weights(const Tensor<T>&, const MhdlsaParams<T>&);            \
  template Tensor<T> dynamic_local_aggregate(const Tensor<T>&, const Tensor<T>&, std::int64_t, int, \
                                             PadMode);                                              \
  template Tensor<T> mhdlsa_block(const Tensor<T>&, const MhdlsaParams<T>&);

DLGSA_INSTANTIATE_MHDLSA(float)
DLGSA_INSTANTIATE_MHDLSA(double)

}  // namespace dlgsa
