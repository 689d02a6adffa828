// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Hybrid blocks, residual groups and the full super-resolution network.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dlgsa/sparsegsa.hpp"

namespace dlgsa {

enum class LocalVariant { kMhdlsa, kMhsa };

/// Composition of one hybrid block: local then global (the default), or the
/// same mechanism twice.
enum class BlockLayout { kHybrid, kLocalOnly, kGlobalOnly };

struct ModelConfig {
  int num_groups = 6;
  int blocks_per_group = 4;
  std::int64_t channels = 90;
  std::int64_t heads = 6;
  int scale = 4;
  int k = 3;
  double gamma = 0.5;
  double ffn_ratio = 2.66;
  int in_channels = 3;

  AttentionGate attention_variant = AttentionGate::kRelu;
  LocalVariant local_variant = LocalVariant::kMhdlsa;
  BlockLayout block_layout = BlockLayout::kHybrid;
  bool normalize_qk = true;
  int mhsa_window = 8;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// One "field=value" line per field, in declaration order.
  std::string fingerprint() const;
};

/// "full", "light" or "tiny" at the given scale.
ModelConfig model_preset(std::string_view name, int scale = 4);
std::vector<std::string_view> model_preset_names();

std::string_view to_string(AttentionGate g);
std::string_view to_string(LocalVariant v);
std::string_view to_string(BlockLayout l);
AttentionGate parse_attention_gate(std::string_view s);
LocalVariant parse_local_variant(std::string_view s);
BlockLayout parse_block_layout(std::string_view s);

enum class StageKind { kMhdlsa, kSparseGsa, kWindowAttention };

template <typename T>
struct Stage {
  std::string name;  // parameter prefix, e.g. "groups.0.blocks.1.global"
  StageKind kind = StageKind::kMhdlsa;
  MhdlsaParams<T> mhdlsa;
  SparseGsaParams<T> gsa;
  WindowAttentionParams<T> window;
};

template <typename T>
struct HdtbParams {
  std::vector<Stage<T>> stages;
};

template <typename T>
struct RhdtgParams {
  std::vector<HdtbParams<T>> blocks;
  Conv2d<T> conv;  // 3x3, zero-initialized
};

template <typename T>
struct DlgsaNet {
  ModelConfig cfg;
  ParamStore<T> store{0};
  Conv2d<T> head;  // 3x3, in_channels -> c
  std::vector<RhdtgParams<T>> groups;
  Conv2d<T> tail;  // 3x3, c -> in_channels * scale^2
};

/// Deterministic given (config, seed); float and double builds with the same
/// seed hold the same values up to rounding.
template <typename T>
DlgsaNet<T> build_model(const ModelConfig& cfg, std::uint64_t seed);

struct ForwardOptions {
  /// When > 0, global attention runs tile-wise with this window (inference).
  int tlc_window = 0;
};

template <typename T>
Tensor<T> hdtb_forward(const Tensor<T>& x, const HdtbParams<T>& p, const ForwardOptions& opt = {});

/// Z_out = conv(blocks(Z_0)) + Z_0.
template <typename T>
Tensor<T> rhdtg_forward(const Tensor<T>& z0, const RhdtgParams<T>& p, const ForwardOptions& opt = {});

/// All groups in sequence, without the long skip.
template <typename T>
Tensor<T> group_stack_forward(const Tensor<T>& features, const DlgsaNet<T>& net, const ForwardOptions& opt = {});

/// [n, 3, h, w] in [0, 1] -> [n, 3, h*s, w*s], unclamped.
template <typename T>
Tensor<T> model_forward(const Tensor<T>& lr, const DlgsaNet<T>& net, const ForwardOptions& opt = {});

}  // namespace dlgsa
