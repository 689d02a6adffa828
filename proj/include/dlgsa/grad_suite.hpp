// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference checks of every differentiable op and block in double
// precision. Zero-initialized weights are replaced by random values first so
// that no gradient is trivially zero.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlgsa/gradcheck.hpp"

namespace dlgsa {

struct GradSuiteEntry {
  std::string name;
  GradCheckReport report;
};

/// module: "ops", "mhdlsa", "sparsegsa", "network" or "all".
std::vector<GradSuiteEntry> run_grad_suite(const std::string& module, std::uint64_t seed = 1,
                                           int coords_per_block = 10, double eps = 1e-5);

}  // namespace dlgsa
