// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/grad_suite.hpp"

#include <map>

#include "dlgsa/network.hpp"
#include "dlgsa/train.hpp"

namespace dlgsa {

namespace {

TensorD random_tensor(Rng& rng, Shape s, double scale = 1.0, bool requires_grad = true) {
  std::vector<double> v(static_cast<std::size_t>(s.numel()));
  for (double& x : v) x = scale * rng.normal();
  return TensorD(s, std::move(v), requires_grad);
}

// Uniform values bounded away from zero, for inputs that pass through relu.
TensorD away_from_zero(Rng& rng, Shape s) {
  std::vector<double> v(static_cast<std::size_t>(s.numel()));
  for (double& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return TensorD(s, std::move(v), true);
}

void perturb(ParamStore<double>& store, Rng& rng, double sigma) {
  for (const auto& [name, t] : store.items()) {
    TensorD h = t;
    for (double& v : h.mutable_data()) v += sigma * rng.normal();
  }
}

// Projects an output to a scalar with fixed random weights.
TensorD project(const TensorD& out, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(out, random_tensor(rng, out.shape(), 1.0, false)));
}

std::vector<std::int64_t> pick(Rng& rng, std::int64_t numel, int count) {
  std::vector<std::int64_t> idx;
  if (numel <= count) {
    for (std::int64_t i = 0; i < numel; ++i) idx.push_back(i);
  } else {
    for (int i = 0; i < count; ++i) idx.push_back(rng.below(numel));
  }
  return idx;
}

// Checks `count` random coordinates spread over every tensor of `store`
// whose name starts with one of `prefixes`, plus the inputs listed.
GradCheckReport check_store(const std::function<TensorD()>& loss, const ParamStore<double>& store,
                            const std::vector<std::string>& prefixes, Rng& rng, int count, double eps,
                            std::vector<std::pair<std::string, TensorD>> extra = {}) {
  std::vector<std::pair<std::string, TensorD>> leaves;
  for (const auto& [name, t] : store.items())
    for (const auto& p : prefixes)
      if (name.rfind(p, 0) == 0) {
        leaves.emplace_back(name, t);
        break;
      }
  std::map<std::size_t, std::vector<std::int64_t>> chosen;
  for (int i = 0; i < count && !leaves.empty(); ++i) {
    const auto li = static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(leaves.size())));
    chosen[li].push_back(rng.below(leaves[li].second.numel()));
  }
  std::vector<std::pair<std::string, TensorD>> picked;
  std::vector<std::vector<std::int64_t>> indices;
  for (auto& [li, idx] : chosen) {
    picked.push_back(leaves[li]);
    indices.push_back(idx);
  }
  for (auto& e : extra) {
    indices.push_back(pick(rng, e.second.numel(), count));
    picked.push_back(std::move(e));
  }
  return check_leaves(loss, picked, indices, eps);
}

void add(std::vector<GradSuiteEntry>& out, std::string name, GradCheckReport r) {
  out.push_back({std::move(name), std::move(r)});
}

void ops_suite(std::vector<GradSuiteEntry>& out, std::uint64_t seed, double eps) {
  Rng rng(seed);
  {
    TensorD x = random_tensor(rng, {1, 2, 5, 5});
    TensorD w = random_tensor(rng, {3, 2, 3, 3});
    TensorD b = random_tensor(rng, {1, 3, 1, 1});
    Conv2dOptions opt;
    opt.pad = 1;
    add(out, "conv2d", check_leaves([&] { return project(conv2d(x, w, b, opt), 11); },
                                    {{"x", x}, {"w", w}, {"b", b}}, {{}, {}, {}}, eps));
    Conv2dOptions strided;
    strided.stride = 2;
    strided.pad = 1;
    strided.pad_mode = PadMode::kReflect;
    add(out, "conv2d(stride 2, reflect)", check_leaves([&] { return project(conv2d(x, w, b, strided), 12); },
                                                       {{"x", x}, {"w", w}}, {{}, {}}, eps));
    TensorD wg = random_tensor(rng, {4, 1, 3, 3});
    Conv2dOptions grouped;
    grouped.pad = 1;
    grouped.groups = 2;
    grouped.pad_mode = PadMode::kCircular;
    add(out, "conv2d(groups 2, circular)", check_leaves([&] { return project(conv2d(x, wg, TensorD(), grouped), 13); },
                                                        {{"x", x}, {"w", wg}}, {{}, {}}, eps));
  }
  {
    TensorD x = random_tensor(rng, {2, 3, 5, 4});
    TensorD w = random_tensor(rng, {3, 1, 3, 3});
    TensorD b = random_tensor(rng, {1, 3, 1, 1});
    add(out, "depthwise_conv2d", check_leaves([&] { return project(depthwise_conv2d(x, w, b), 14); },
                                              {{"x", x}, {"w", w}, {"b", b}}, {{}, {}, {}}, eps));
  }
  {
    TensorD x = random_tensor(rng, {2, 5, 3, 3});
    TensorD g = random_tensor(rng, {1, 5, 1, 1});
    TensorD o = random_tensor(rng, {1, 5, 1, 1});
    add(out, "layer_norm", check_leaves([&] { return project(layer_norm(x, g, o), 15); },
                                        {{"x", x}, {"gain", g}, {"offset", o}}, {{}, {}, {}}, eps));
  }
  {
    TensorD a = random_tensor(rng, {2, 3, 4, 5});
    TensorD b = random_tensor(rng, {2, 3, 5, 2});
    TensorD bt = random_tensor(rng, {1, 3, 2, 5});
    add(out, "matmul", check_leaves([&] { return project(matmul(a, b), 16); }, {{"a", a}, {"b", b}}, {{}, {}}, eps));
    add(out, "matmul(transposed, shared b)",
        check_leaves([&] { return project(matmul(a, bt, false, true), 17); }, {{"a", a}, {"b", bt}}, {{}, {}}, eps));
    TensorD at = random_tensor(rng, {2, 3, 5, 4});
    add(out, "matmul(transposed a)",
        check_leaves([&] { return project(matmul(at, b, true, false), 18); }, {{"a", at}, {"b", b}}, {{}, {}}, eps));
  }
  {
    TensorD x = away_from_zero(rng, {1, 2, 3, 4});
    add(out, "relu", check_leaves([&] { return project(relu(x), 19); }, {{"x", x}}, {{}}, eps));
    TensorD y = random_tensor(rng, {1, 2, 3, 4});
    add(out, "gelu", check_leaves([&] { return project(gelu(y), 20); }, {{"x", y}}, {{}}, eps));
    add(out, "exp", check_leaves([&] { return project(exp(y), 21); }, {{"x", y}}, {{}}, eps));
    add(out, "softmax", check_leaves([&] { return project(softmax_lastdim(y), 22); }, {{"x", y}}, {{}}, eps));
    add(out, "l2_normalize", check_leaves([&] { return project(l2_normalize_lastdim(y), 23); }, {{"x", y}}, {{}}, eps));
    TensorD z = random_tensor(rng, {1, 2, 3, 4});
    TensorD zb = random_tensor(rng, {1, 2, 3, 4});
    add(out, "add/sub/mul", check_leaves([&] { return project(mul(add(y, z), sub(z, zb)), 24); },
                                         {{"a", y}, {"b", z}, {"c", zb}}, {{}, {}, {}}, eps));
    TensorD s = random_tensor(rng, {1, 2, 1, 1});
    add(out, "channel_scale", check_leaves([&] { return project(channel_scale(y, s), 25); },
                                           {{"x", y}, {"s", s}}, {{}, {}}, eps));
    add(out, "scale/mean", check_leaves([&] { return mean(mul(scale(y, 3.0), y)); }, {{"x", y}}, {{}}, eps));
  }
  {
    TensorD x = random_tensor(rng, {1, 8, 2, 3});
    add(out, "pixel_shuffle", check_leaves([&] { return project(pixel_shuffle(x, 2), 26); }, {{"x", x}}, {{}}, eps));
    TensorD y = random_tensor(rng, {1, 2, 4, 6});
    add(out, "pixel_unshuffle", check_leaves([&] { return project(pixel_unshuffle(y, 2), 27); }, {{"x", y}}, {{}}, eps));
    add(out, "window partition/merge", check_leaves([&] {
          return project(window_merge(scale(window_partition(y, 2), 2.0), 4, 6), 28);
        }, {{"x", y}}, {{}}, eps));
    add(out, "slice/concat/reshape", check_leaves([&] {
          return project(reshape(concat_channels<double>({slice_channels(y, 1, 1), y}), Shape{1, 1, 12, 6}), 29);
        }, {{"x", y}}, {{}}, eps));
    add(out, "pad2d(reflect)", check_leaves([&] { return project(pad2d(y, 1, PadMode::kReflect), 30); },
                                            {{"x", y}}, {{}}, eps));
  }
  {
    TensorD field = random_tensor(rng, {1, 2 * 9, 6, 6});
    TensorD feat = random_tensor(rng, {1, 4, 6, 6});
    add(out, "dynamic_local_aggregate",
        check_leaves([&] { return project(dynamic_local_aggregate(field, feat, 2, 3), 31); },
                     {{"field", field}, {"features", feat}}, {{}, {}}, eps));
    add(out, "dynamic_local_aggregate(circular)",
        check_leaves([&] { return project(dynamic_local_aggregate(field, feat, 2, 3, PadMode::kCircular), 32); },
                     {{"field", field}, {"features", feat}}, {{}, {}}, eps));
  }
  {
    TensorD p = random_tensor(rng, {1, 3, 4, 4});
    TensorD t = random_tensor(rng, {1, 3, 4, 4}, 1.0, false);
    add(out, "l1_loss", check_leaves([&] { return l1_loss(p, t); }, {{"pred", p}}, {{}}, eps));
  }
}

void mhdlsa_suite(std::vector<GradSuiteEntry>& out, std::uint64_t seed, int count, double eps) {
  Rng rng(seed + 100);
  ParamStore<double> store(seed);
  MhdlsaConfig cfg;
  cfg.channels = 12;
  cfg.heads = 2;
  cfg.k = 3;
  cfg.gamma = 0.5;
  cfg.ffn_ratio = 2.0;
  const auto p = MhdlsaParams<double>::make(store, "mhdlsa", cfg);
  perturb(store, rng, 0.2);
  TensorD x = random_tensor(rng, {1, 12, 6, 6});
  add(out, "gated_ffn", check_store([&] { return project(gated_ffn(x, p.ffn), 41); }, store, {"mhdlsa.ffn"}, rng,
                                    count, eps, {{"x", x}}));
  add(out, "generate_dynamic_weights",
      check_store([&] { return project(generate_dynamic_weights(x, p), 42); }, store, {"mhdlsa.gen_"}, rng, count, eps,
                  {{"x", x}}));
  add(out, "mhdlsa_block", check_store([&] { return project(mhdlsa_block(x, p), 43); }, store, {"mhdlsa"}, rng,
                                       3 * count, eps, {{"x", x}}));
}

void sparsegsa_suite(std::vector<GradSuiteEntry>& out, std::uint64_t seed, int count, double eps) {
  Rng rng(seed + 200);
  for (AttentionGate gate : {AttentionGate::kRelu, AttentionGate::kSoftmax}) {
    for (bool norm : {true, false}) {
      ParamStore<double> store(seed);
      SparseGsaConfig cfg;
      cfg.channels = 12;
      cfg.heads = 2;
      cfg.ffn_ratio = 2.0;
      cfg.gate = gate;
      cfg.normalize_qk = norm;
      const auto p = SparseGsaParams<double>::make(store, "gsa", cfg);
      perturb(store, rng, 0.2);
      TensorD x = random_tensor(rng, {1, 12, 5, 5});
      std::string name = std::string("sparsegsa_block(") + (gate == AttentionGate::kRelu ? "relu" : "softmax") +
                         (norm ? ", normalized qk)" : ")");
      add(out, name, check_store([&] { return project(sparsegsa_block(x, p), 51); }, store, {"gsa"}, rng, 3 * count,
                                 eps, {{"x", x}}));
      add(out, name + " log_alpha", check_store([&] { return project(sparsegsa_block(x, p), 52); }, store,
                                                {"gsa.log_alpha"}, rng, count, eps));
    }
  }
  ParamStore<double> store(seed);
  WindowAttentionConfig wc;
  wc.channels = 12;
  wc.heads = 2;
  wc.window = 2;
  wc.ffn_ratio = 2.0;
  const auto wp = WindowAttentionParams<double>::make(store, "win", wc);
  perturb(store, rng, 0.2);
  TensorD x = random_tensor(rng, {1, 12, 4, 4});
  auto loss = [&] { return project(window_attention_block(x, wp), 53); };
  add(out, "window_attention_block",
      check_store(loss, store, {"win.norm", "win.qkv.weight", "win.proj_out", "win.ffn"}, rng, 3 * count, eps,
                  {{"x", x}}));
  // Softmax rows are invariant to the key bias, whose gradient is therefore
  // exactly zero; only the query and value thirds are compared.
  std::vector<std::int64_t> qv;
  for (std::int64_t i = 0; i < wc.channels; ++i) {
    qv.push_back(i);
    qv.push_back(2 * wc.channels + i);
  }
  add(out, "window_attention_block qkv bias (q, v)",
      check_leaves(loss, {{"win.qkv.bias", store.get("win.qkv.bias")}}, {qv}, eps));
}

void network_suite(std::vector<GradSuiteEntry>& out, std::uint64_t seed, int count, double eps) {
  Rng rng(seed + 300);
  {
    ModelConfig cfg = model_preset("tiny", 2);
    cfg.num_groups = 1;
    cfg.blocks_per_group = 2;
    cfg.channels = 12;
    cfg.heads = 2;
    cfg.ffn_ratio = 2.0;
    DlgsaNet<double> net = build_model<double>(cfg, seed);
    perturb(net.store, rng, 0.1);
    TensorD z = random_tensor(rng, {1, 12, 5, 5});
    add(out, "hdtb", check_store([&] { return project(hdtb_forward(z, net.groups[0].blocks[0]), 61); }, net.store,
                                 {"groups.0.blocks.0."}, rng, 2 * count, eps, {{"z", z}}));
    add(out, "rhdtg", check_store([&] { return project(rhdtg_forward(z, net.groups[0]), 62); }, net.store,
                                  {"groups.0."}, rng, 3 * count, eps, {{"z", z}}));
  }
  {
    DlgsaNet<double> net = build_model<double>(model_preset("tiny", 2), seed);
    perturb(net.store, rng, 0.05);
    TensorD lr = random_tensor(rng, {1, 3, 8, 8}, 0.5);
    Rng trng(seed + 301);
    const TensorD target = random_tensor(trng, {1, 3, 16, 16}, 0.5, false);
    auto loss = [&] { return l1_loss(model_forward(lr, net), target); };
    add(out, "dlgsanet-tiny head/tail", check_store(loss, net.store, {"head", "tail"}, rng, count, eps, {{"lr", lr}}));
    add(out, "dlgsanet-tiny group convs", check_store(loss, net.store, {"groups.0.conv", "groups.1.conv", "groups.2.conv"},
                                                      rng, count, eps));
    std::vector<std::string> local, global;
    for (int g = 0; g < 3; ++g)
      for (int b = 0; b < 3; ++b) {
        const std::string pre = "groups." + std::to_string(g) + ".blocks." + std::to_string(b);
        local.push_back(pre + ".local.");
        global.push_back(pre + ".global.");
      }
    add(out, "dlgsanet-tiny mhdlsa params", check_store(loss, net.store, local, rng, count, eps));
    add(out, "dlgsanet-tiny sparsegsa params", check_store(loss, net.store, global, rng, count, eps));
  }
}

}  // namespace

std::vector<GradSuiteEntry> run_grad_suite(const std::string& module, std::uint64_t seed, int coords_per_block,
                                           double eps) {
  const bool all = module == "all";
  if (!all && module != "ops" && module != "mhdlsa" && module != "sparsegsa" && module != "network") {
    throw UsageError("unknown gradcheck module '" + module + "' (all, ops, mhdlsa, sparsegsa, network)");
  }
  std::vector<GradSuiteEntry> out;
  if (all || module == "ops") ops_suite(out, seed, eps);
  if (all || module == "mhdlsa") mhdlsa_suite(out, seed, coords_per_block, eps);
  if (all || module == "sparsegsa") sparsegsa_suite(out, seed, coords_per_block, eps);
  if (all || module == "network") network_suite(out, seed, coords_per_block, eps);
  return out;
}

}  // namespace dlgsa
