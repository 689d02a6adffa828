// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dlgsa/errors.hpp"
#include "dlgsa/shape.hpp"

namespace dlgsa {

namespace detail {

template <typename T>
struct Node;

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::shared_ptr<Node<T>> creator;  // null for leaves

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
  bool is_leaf() const noexcept { return creator == nullptr; }
};

/// One recorded operation. `backward` receives the op's output (values and
/// gradient) and accumulates into the gradients of `inputs`.
template <typename T>
struct Node {
  const char* name = "";
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  std::function<void(const TensorImpl<T>& out)> backward;
};

}  // namespace detail

/// Whether operations currently record a gradient graph (thread local).
bool grad_enabled() noexcept;

/// Disables graph recording for its lifetime. Used for inference and TLC.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Rank-4 NCHW tensor with optional reverse-mode gradient tracking.
///
/// A Tensor is a shared handle: copies alias the same buffer, which is how the
/// parameter registry and the layers see the same weights. Values produced by
/// operations are treated as immutable; only leaves (parameters, inputs) are
/// written through `mutable_data`.
///
/// Gradients accumulate across `backward` calls until `zero_grad`.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false) {
    return full(Shape{1, 1, 1, 1}, value, requires_grad);
  }

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return checked().shape; }
  std::int64_t numel() const { return shape().numel(); }

  std::span<const T> data() const { return checked().data; }
  std::span<T> mutable_data() { return checked().data; }
  T item() const;
  T at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    const Shape& s = shape();
    return data()[((n * s.c + c) * s.h + h) * s.w + w];
  }

  bool requires_grad() const { return checked().requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !checked().grad.empty(); }
  std::span<const T> grad() const { return checked().grad; }
  std::span<T> mutable_grad() { return checked().ensure_grad(); }
  void zero_grad();

  /// Reverse-mode sweep from this scalar. Every reachable leaf with
  /// requires_grad gets d(this)/d(leaf) added to its grad.
  void backward() const;

  /// Copy of the values with no graph history.
  Tensor detach() const;

  const char* op_name() const { return checked().creator ? checked().creator->name : "leaf"; }

  const std::shared_ptr<detail::TensorImpl<T>>& impl() const { return impl_; }
  static Tensor from_impl(std::shared_ptr<detail::TensorImpl<T>> impl) {
    Tensor t;
    t.impl_ = std::move(impl);
    return t;
  }

 private:
  detail::TensorImpl<T>& checked() const {
    if (!impl_) throw UsageError("use of an undefined tensor");
    return *impl_;
  }

  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Elementwise copy converting precision. No graph history.
template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x) {
  std::vector<To> out(x.data().begin(), x.data().end());
  return Tensor<To>(x.shape(), std::move(out));
}

}  // namespace dlgsa
