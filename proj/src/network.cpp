// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/network.hpp"

#include <cmath>
#include <sstream>

namespace dlgsa {

void ModelConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); };
  if (num_groups < 1) fail("num_groups", "must be >= 1");
  if (blocks_per_group < 1) fail("blocks_per_group", "must be >= 1");
  if (channels < 1) fail("channels", "must be >= 1");
  if (heads < 1) fail("heads", "must be >= 1");
  if (channels % heads != 0) fail("heads", "channels " + std::to_string(channels) + " not divisible by heads");
  if (scale < 2 || scale > 4) fail("scale", "must be 2, 3 or 4");
  if (k < 1 || k % 2 == 0) fail("k", "must be a positive odd integer");
  if (in_channels != 3) fail("in_channels", "only RGB (3) is supported");
  if (!(ffn_ratio > 0.0)) fail("ffn_ratio", "must be > 0");
  if (mhsa_window < 1) fail("mhsa_window", "must be >= 1");
  squeezed_channels(channels, gamma);
  ffn_hidden_channels(channels, ffn_ratio);
}

std::string ModelConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "num_groups=" << num_groups << "\n"
     << "blocks_per_group=" << blocks_per_group << "\n"
     << "channels=" << channels << "\n"
     << "heads=" << heads << "\n"
     << "scale=" << scale << "\n"
     << "k=" << k << "\n"
     << "gamma=" << gamma << "\n"
     << "ffn_ratio=" << ffn_ratio << "\n"
     << "in_channels=" << in_channels << "\n"
     << "attention_variant=" << to_string(attention_variant) << "\n"
     << "local_variant=" << to_string(local_variant) << "\n"
     << "block_layout=" << to_string(block_layout) << "\n"
     << "normalize_qk=" << (normalize_qk ? "true" : "false") << "\n"
     << "mhsa_window=" << mhsa_window << "\n";
  return os.str();
}

ModelConfig model_preset(std::string_view name, int scale) {
  ModelConfig c;
  c.scale = scale;
  if (name == "full") {
    return c;
  }
  if (name == "light") {
    c.num_groups = 4;
    c.blocks_per_group = 3;
    c.channels = 48;
    return c;
  }
  if (name == "tiny") {
    c.num_groups = 3;
    c.blocks_per_group = 3;
    c.channels = 48;
    return c;
  }
  throw ConfigError("unknown model preset '" + std::string(name) + "' (full, light, tiny)");
}

std::vector<std::string_view> model_preset_names() { return {"full", "light", "tiny"}; }

std::string_view to_string(AttentionGate g) { return g == AttentionGate::kRelu ? "relu" : "softmax"; }
std::string_view to_string(LocalVariant v) { return v == LocalVariant::kMhdlsa ? "mhdlsa" : "mhsa"; }
std::string_view to_string(BlockLayout l) {
  switch (l) {
    case BlockLayout::kHybrid: return "hybrid";
    case BlockLayout::kLocalOnly: return "local_only";
    case BlockLayout::kGlobalOnly: return "global_only";
  }
  return "?";
}

AttentionGate parse_attention_gate(std::string_view s) {
  if (s == "relu") return AttentionGate::kRelu;
  if (s == "softmax") return AttentionGate::kSoftmax;
  throw ConfigError("attention_variant: expected relu or softmax, got '" + std::string(s) + "'");
}

LocalVariant parse_local_variant(std::string_view s) {
  if (s == "mhdlsa") return LocalVariant::kMhdlsa;
  if (s == "mhsa") return LocalVariant::kMhsa;
  throw ConfigError("local_variant: expected mhdlsa or mhsa, got '" + std::string(s) + "'");
}

BlockLayout parse_block_layout(std::string_view s) {
  if (s == "hybrid") return BlockLayout::kHybrid;
  if (s == "local_only") return BlockLayout::kLocalOnly;
  if (s == "global_only") return BlockLayout::kGlobalOnly;
  throw ConfigError("block_layout: expected hybrid, local_only or global_only, got '" + std::string(s) + "'");
}

namespace {

template <typename T>
Stage<T> make_local(ParamStore<T>& store, const std::string& name, const ModelConfig& cfg) {
  Stage<T> st;
  st.name = name;
  if (cfg.local_variant == LocalVariant::kMhdlsa) {
    st.kind = StageKind::kMhdlsa;
    MhdlsaConfig mc;
    mc.channels = cfg.channels;
    mc.heads = cfg.heads;
    mc.k = cfg.k;
    mc.gamma = cfg.gamma;
    mc.ffn_ratio = cfg.ffn_ratio;
    st.mhdlsa = MhdlsaParams<T>::make(store, name, mc);
  } else {
    st.kind = StageKind::kWindowAttention;
    WindowAttentionConfig wc;
    wc.channels = cfg.channels;
    wc.heads = cfg.heads;
    wc.window = cfg.mhsa_window;
    wc.ffn_ratio = cfg.ffn_ratio;
    st.window = WindowAttentionParams<T>::make(store, name, wc);
  }
  return st;
}

template <typename T>
Stage<T> make_global(ParamStore<T>& store, const std::string& name, const ModelConfig& cfg) {
  Stage<T> st;
  st.name = name;
  st.kind = StageKind::kSparseGsa;
  SparseGsaConfig gc;
  gc.channels = cfg.channels;
  gc.heads = cfg.heads;
  gc.ffn_ratio = cfg.ffn_ratio;
  gc.gate = cfg.attention_variant;
  gc.normalize_qk = cfg.normalize_qk;
  st.gsa = SparseGsaParams<T>::make(store, name, gc);
  return st;
}

}  // namespace

template <typename T>
DlgsaNet<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  DlgsaNet<T> net;
  net.cfg = cfg;
  net.store = ParamStore<T>(seed);
  auto& store = net.store;
  net.head = Conv2d<T>::make(store, "head", cfg.in_channels, cfg.channels, 3, Init::kFanInUniform);
  for (int g = 0; g < cfg.num_groups; ++g) {
    RhdtgParams<T> group;
    const std::string gname = "groups." + std::to_string(g);
    for (int b = 0; b < cfg.blocks_per_group; ++b) {
      const std::string bname = gname + ".blocks." + std::to_string(b);
      HdtbParams<T> block;
      switch (cfg.block_layout) {
        case BlockLayout::kHybrid:
          block.stages.push_back(make_local(store, bname + ".local", cfg));
          block.stages.push_back(make_global(store, bname + ".global", cfg));
          break;
        case BlockLayout::kLocalOnly:
          block.stages.push_back(make_local(store, bname + ".local", cfg));
          block.stages.push_back(make_local(store, bname + ".local2", cfg));
          break;
        case BlockLayout::kGlobalOnly:
          block.stages.push_back(make_global(store, bname + ".global", cfg));
          block.stages.push_back(make_global(store, bname + ".global2", cfg));
          break;
      }
      group.blocks.push_back(std::move(block));
    }
    group.conv = Conv2d<T>::make(store, gname + ".conv", cfg.channels, cfg.channels, 3, Init::kZeros);
    net.groups.push_back(std::move(group));
  }
  net.tail = Conv2d<T>::make(store, "tail", cfg.channels, std::int64_t(cfg.in_channels) * cfg.scale * cfg.scale, 3,
                             Init::kFanInUniform);
  return net;
}

template <typename T>
Tensor<T> hdtb_forward(const Tensor<T>& x, const HdtbParams<T>& p, const ForwardOptions& opt) {
  Tensor<T> h = x;
  for (const Stage<T>& st : p.stages) {
    switch (st.kind) {
      case StageKind::kMhdlsa:
        h = mhdlsa_block(h, st.mhdlsa);
        break;
      case StageKind::kSparseGsa:
        h = opt.tlc_window > 0 ? tlc_windowed(h, st.gsa, opt.tlc_window) : sparsegsa_block(h, st.gsa);
        break;
      case StageKind::kWindowAttention:
        h = window_attention_block(h, st.window);
        break;
    }
  }
  return h;
}

template <typename T>
Tensor<T> rhdtg_forward(const Tensor<T>& z0, const RhdtgParams<T>& p, const ForwardOptions& opt) {
  Tensor<T> z = z0;
  for (const auto& b : p.blocks) z = hdtb_forward(z, b, opt);
  return add(p.conv(z), z0);
}

template <typename T>
Tensor<T> group_stack_forward(const Tensor<T>& features, const DlgsaNet<T>& net, const ForwardOptions& opt) {
  Tensor<T> z = features;
  for (const auto& g : net.groups) z = rhdtg_forward(z, g, opt);
  return z;
}

template <typename T>
Tensor<T> model_forward(const Tensor<T>& lr, const DlgsaNet<T>& net, const ForwardOptions& opt) {
  const Shape s = lr.shape();
  if (s.c != net.cfg.in_channels) {
    throw DimensionError("model expects " + std::to_string(net.cfg.in_channels) + " channels, got " + s.str());
  }
  if (s.h < net.cfg.k || s.w < net.cfg.k) {
    throw UsageError("input " + s.str() + " is smaller than the " + std::to_string(net.cfg.k) + "x" +
                     std::to_string(net.cfg.k) + " dynamic kernel");
  }
  const Tensor<T> f = net.head(lr);
  const Tensor<T> deep = group_stack_forward(f, net, opt);
  return pixel_shuffle(net.tail(add(deep, f)), net.cfg.scale);
}

#define DLGSA_INSTANTIATE_NET(T)                                                                            \
  template DlgsaNet<T> build_model(const ModelConfig&, std::uint64_t);                                      \
  template Tensor<T> hdtb_forward(const Tensor<T>&, const HdtbParams<T>&, const ForwardOptions&);           \
  template Tensor<T> rhdtg_forward(const Tensor<T>&, const RhdtgParams<T>&, const ForwardOptions&);         \
  template Tensor<T> group_stack_forward(const Tensor<T>&, const DlgsaNet<T>&, const ForwardOptions&);      \
  template Tensor<T> model_forward(const Tensor<T>&, const DlgsaNet<T>&, const ForwardOptions&);

DLGSA_INSTANTIATE_NET(float)
DLGSA_INSTANTIATE_NET(double)

}  // namespace dlgsa
