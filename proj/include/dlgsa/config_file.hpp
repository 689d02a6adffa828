// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Flat "key = value" configuration text. '#' starts a comment. Keys are the
// TrainConfig and ModelConfig field names; `model` selects a preset that the
// remaining model keys then override. Unknown or repeated keys are errors.
//
//   model = tiny
//   scale = 2
//   dataset = synthetic(0, 8, 64)     # or directory(/data/div2k)
//   milestones = 1000, 1500, 1800

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dlgsa/train.hpp"

namespace dlgsa {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

std::vector<KeyValue> parse_key_values(std::string_view text);

TrainConfig train_config_from_text(std::string_view text);
TrainConfig load_train_config(const std::string& path);

/// Round-trips through train_config_from_text.
std::string train_config_to_text(const TrainConfig& cfg);

}  // namespace dlgsa
