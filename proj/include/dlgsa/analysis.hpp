// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Closed-form parameter and multiply-accumulate counts for a ModelConfig.
// One MAC is counted as one FLOP. Normalization, activations, elementwise
// arithmetic and pixel shuffling contribute no MACs.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlgsa/network.hpp"

namespace dlgsa {

struct CostRow {
  std::string name;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

struct CostReport {
  ModelConfig config;
  std::vector<CostRow> rows;
  std::int64_t total_params = 0;
  std::int64_t total_macs = 0;
  int out_w = 0, out_h = 0;   // 0 when only parameters were counted
  std::int64_t lr_pixels = 0;
};

CostReport count_params(const ModelConfig& cfg);

/// The network runs on out_w * out_h / scale^2 low-resolution pixels; that
/// area must be an integer.
CostReport count_macs(const ModelConfig& cfg, int out_w, int out_h);

std::string format_report_text(const CostReport& r, bool per_layer = true);
std::string format_report_csv(const CostReport& r);

struct SensitivityRow {
  int k;
  double gamma;
  double ffn_ratio;
  bool valid;         // false when gamma * channels is not an integer
  std::int64_t params;
  std::int64_t macs;
};

/// Counts for K in {3,5}, gamma in {1/4,1/2,1}, e in {2,2.66} around `base`.
std::vector<SensitivityRow> sensitivity_table(const ModelConfig& base, int out_w, int out_h);
std::string format_sensitivity(const std::vector<SensitivityRow>& rows);

}  // namespace dlgsa
