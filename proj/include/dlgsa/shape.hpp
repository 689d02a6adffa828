// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace dlgsa {

/// NCHW extent. Every tensor in the library is rank 4; lower-rank values use
/// leading ones (a scalar is 1x1x1x1, a rank-3 batch of matrices is 1xBxPxQ).
struct Shape {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  constexpr std::int64_t numel() const noexcept { return n * c * h * w; }
  constexpr std::int64_t plane() const noexcept { return h * w; }
  constexpr bool operator==(const Shape&) const noexcept = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

}  // namespace dlgsa
