// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers for defining differentiable operations. Only op implementations
// include this; model code composes the public ops.

#pragma once

#include <initializer_list>
#include <utility>

#include "dlgsa/tensor.hpp"

namespace dlgsa::detail {

template <typename T>
bool any_requires_grad(std::initializer_list<const Tensor<T>*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor<T>* t : inputs) {
    if (t != nullptr && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

/// Attaches a backward rule to `out` when any input requires grad.
/// `fn(out)` reads out.grad (and out.data if needed) and accumulates into the
/// inputs it captured.
template <typename T, typename Fn>
void record(Tensor<T>& out, const char* name, std::initializer_list<const Tensor<T>*> inputs,
            Fn&& fn) {
  if (!any_requires_grad<T>(inputs)) return;
  auto node = std::make_shared<Node<T>>();
  node->name = name;
  for (const Tensor<T>* t : inputs) {
    if (t != nullptr && t->defined()) node->inputs.push_back(t->impl());
  }
  node->backward = std::forward<Fn>(fn);
  out.impl()->requires_grad = true;
  out.impl()->creator = std::move(node);
}

/// Gradient buffer of `t` if it participates in the graph, else nullptr.
template <typename T>
T* grad_target(const Tensor<T>& t) {
  if (!t.defined() || !t.requires_grad()) return nullptr;
  return t.impl()->ensure_grad().data();
}

}  // namespace dlgsa::detail
