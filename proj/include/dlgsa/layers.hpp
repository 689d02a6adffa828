// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Parameter registry, initializers and the small stateless layer wrappers
// shared by the attention blocks and the network.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dlgsa/ops.hpp"

namespace dlgsa {

/// splitmix-seeded 64-bit generator with portable uniform and normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::int64_t below(std::int64_t n);  // [0, n)

  std::uint64_t state() const noexcept { return s_; }
  void set_state(std::uint64_t s) noexcept { s_ = s; }

 private:
  std::uint64_t s_;
};

enum class Init {
  kZeros,
  kOnes,
  kTruncNormal,  // sigma 0.02, cut at 2 sigma
  kFanInUniform  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = c*h*w of the weight
};

/// Named, ordered parameter set. Names are unique; tensors are shared
/// handles, so layers hold the same buffers as the registry.
template <typename T>
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed) : rng_(seed) {}

  Tensor<T> add(const std::string& name, Shape shape, Init init);

  const Tensor<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  /// In creation order.
  const std::vector<std::pair<std::string, Tensor<T>>>& items() const noexcept { return items_; }
  std::int64_t total_elements() const;
  void zero_grad();

 private:
  Rng rng_;
  std::vector<std::pair<std::string, Tensor<T>>> items_;
  std::map<std::string, std::size_t> index_;
};

template <typename T>
struct Conv2d {
  Tensor<T> weight;  // [cout, cin/groups, k, k]
  Tensor<T> bias;    // [1, cout, 1, 1]
  int pad = 0;
  int groups = 1;
  PadMode pad_mode = PadMode::kZero;

  static Conv2d make(ParamStore<T>& store, const std::string& name, std::int64_t cin, std::int64_t cout,
                     int k, Init init, PadMode pad_mode = PadMode::kZero, int groups = 1);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct DepthwiseConv2d {
  Tensor<T> weight;  // [c, 1, k, k]
  Tensor<T> bias;    // [1, c, 1, 1]
  PadMode pad_mode = PadMode::kZero;

  static DepthwiseConv2d make(ParamStore<T>& store, const std::string& name, std::int64_t c, int k,
                              Init init, PadMode pad_mode = PadMode::kZero);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;    // [1, c, 1, 1]
  Tensor<T> offset;  // [1, c, 1, 1]

  static LayerNorm make(ParamStore<T>& store, const std::string& name, std::int64_t c);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

}  // namespace dlgsa
