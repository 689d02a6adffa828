// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/layers.hpp"

#include <cmath>
#include <numbers>

namespace dlgsa {

Rng::Rng(std::uint64_t seed) : s_(seed) {}

std::uint64_t Rng::next() {
  // splitmix64
  std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t Rng::below(std::int64_t n) {
  if (n <= 0) throw UsageError("Rng::below needs n > 0");
  return static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(n));
}

template <typename T>
Tensor<T> ParamStore<T>::add(const std::string& name, Shape shape, Init init) {
  if (contains(name)) throw InternalError("duplicate parameter name " + name);
  Tensor<T> t(shape);
  auto d = t.mutable_data();
  const double fan_in = static_cast<double>(shape.c * shape.h * shape.w);
  for (auto& v : d) {
    switch (init) {
      case Init::kZeros: v = T(0); break;
      case Init::kOnes: v = T(1); break;
      case Init::kTruncNormal: {
        double z = rng_.normal();
        while (std::fabs(z) > 2.0) z = rng_.normal();
        v = static_cast<T>(0.02 * z);
        break;
      }
      case Init::kFanInUniform: {
        const double bound = 1.0 / std::sqrt(fan_in);
        v = static_cast<T>(rng_.uniform(-bound, bound));
        break;
      }
    }
  }
  t.set_requires_grad(true);
  index_[name] = items_.size();
  items_.emplace_back(name, t);
  return t;
}

template <typename T>
const Tensor<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("no parameter named " + name);
  return items_[it->second].second;
}

template <typename T>
std::int64_t ParamStore<T>::total_elements() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : items_) n += t.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& [name, t] : items_) t.zero_grad();
}

template <typename T>
Conv2d<T> Conv2d<T>::make(ParamStore<T>& store, const std::string& name, std::int64_t cin, std::int64_t cout,
                          int k, Init init, PadMode pad_mode, int groups) {
  Conv2d c;
  c.weight = store.add(name + ".weight", Shape{cout, cin / groups, k, k}, init);
  c.bias = store.add(name + ".bias", Shape{1, cout, 1, 1}, Init::kZeros);
  c.pad = k / 2;
  c.groups = groups;
  c.pad_mode = pad_mode;
  return c;
}

template <typename T>
Tensor<T> Conv2d<T>::operator()(const Tensor<T>& x) const {
  Conv2dOptions opt;
  opt.pad = pad;
  opt.groups = groups;
  opt.pad_mode = pad_mode;
  return conv2d(x, weight, bias, opt);
}

template <typename T>
DepthwiseConv2d<T> DepthwiseConv2d<T>::make(ParamStore<T>& store, const std::string& name, std::int64_t c, int k,
                                            Init init, PadMode pad_mode) {
  DepthwiseConv2d d;
  d.weight = store.add(name + ".weight", Shape{c, 1, k, k}, init);
  d.bias = store.add(name + ".bias", Shape{1, c, 1, 1}, Init::kZeros);
  d.pad_mode = pad_mode;
  return d;
}

template <typename T>
Tensor<T> DepthwiseConv2d<T>::operator()(const Tensor<T>& x) const {
  return depthwise_conv2d(x, weight, bias, pad_mode);
}

template <typename T>
LayerNorm<T> LayerNorm<T>::make(ParamStore<T>& store, const std::string& name, std::int64_t c) {
  LayerNorm n;
  n.gain = store.add(name + ".gain", Shape{1, c, 1, 1}, Init::kOnes);
  n.offset = store.add(name + ".offset", Shape{1, c, 1, 1}, Init::kZeros);
  return n;
}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
  return layer_norm(x, gain, offset);
}

template class ParamStore<float>;
template class ParamStore<double>;
template struct Conv2d<float>;
template struct Conv2d<double>;
template struct DepthwiseConv2d<float>;
template struct DepthwiseConv2d<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;

}  // namespace dlgsa
