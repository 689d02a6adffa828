// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Central-difference verification of analytic gradients (double precision).

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dlgsa/tensor.hpp"

namespace dlgsa {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::int64_t coordinates = 0;
  std::string worst;  // "<name>[<index>] analytic=... numeric=..."
};

/// Relative error used throughout: |a - n| / max(|a|, |n|, 1e-8).
double grad_rel_error(double analytic, double numeric);

/// Checks every coordinate of `input` for the scalar function f.
/// Throws ConfigError when eps <= 0.
double finite_diff_check(const std::function<TensorD(const TensorD&)>& f, const TensorD& input,
                         double eps);

/// Checks selected coordinates of each named leaf against a loss closure that
/// reads those leaves. Leaves are perturbed in place and restored. An empty
/// `indices` entry means every coordinate of that leaf.
GradCheckReport check_leaves(const std::function<TensorD()>& loss,
                             const std::vector<std::pair<std::string, TensorD>>& leaves,
                             const std::vector<std::vector<std::int64_t>>& indices, double eps);

}  // namespace dlgsa
