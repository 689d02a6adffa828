// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/tensor.hpp"

#include <algorithm>
#include <unordered_map>
#include <utility>

namespace dlgsa {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw DimensionError("negative extent in shape " + shape.str());
  }
  impl_ = std::make_shared<detail::TensorImpl<T>>();
  impl_->shape = shape;
  impl_->data.assign(static_cast<std::size_t>(shape.numel()), T(0));
  impl_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
  if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
    throw DimensionError("buffer of " + std::to_string(values.size()) +
                         " elements does not match shape " + shape.str());
  }
  impl_ = std::make_shared<detail::TensorImpl<T>>();
  impl_->shape = shape;
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  Tensor t(shape, requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw UsageError("item() on a tensor of shape " + shape().str());
  return data()[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  if (!checked().is_leaf()) throw UsageError("requires_grad can only be set on leaf tensors");
  checked().requires_grad = on;
}

template <typename T>
void Tensor<T>::zero_grad() {
  auto& g = checked().grad;
  std::fill(g.begin(), g.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(shape(), std::vector<T>(data().begin(), data().end()));
}

template <typename T>
void Tensor<T>::backward() const {
  using Impl = detail::TensorImpl<T>;
  Impl& root = checked();
  if (root.shape.numel() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " + root.shape.str());
  }
  if (!root.requires_grad) throw UsageError("backward() on a tensor outside any graph");

  // Iterative post-order DFS. state: 1 = on stack, 2 = finished.
  std::vector<Impl*> order;
  std::unordered_map<Impl*, int> state;
  std::vector<std::pair<Impl*, std::size_t>> stack;
  stack.emplace_back(&root, 0);
  state[&root] = 1;
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    const std::size_t fanin = impl->creator ? impl->creator->inputs.size() : 0;
    if (next < fanin) {
      Impl* child = impl->creator->inputs[next++].get();
      if (!child->requires_grad) continue;
      auto it = state.find(child);
      if (it == state.end()) {
        state[child] = 1;
        stack.emplace_back(child, 0);
      } else if (it->second == 1) {
        throw InternalError("cycle in gradient graph");
      }
      continue;
    }
    state[impl] = 2;
    order.push_back(impl);
    stack.pop_back();
  }

  root.ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Impl* impl = *it;
    if (impl->is_leaf() || impl->grad.empty()) continue;
    impl->creator->backward(*impl);
    // Intermediate gradients are only needed during this sweep.
    std::vector<T>().swap(impl->grad);
  }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace dlgsa
