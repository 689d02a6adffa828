// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/analysis.hpp"

#include <cstdio>
#include <sstream>

namespace dlgsa {

namespace {

class Counter {
 public:
  Counter(CostReport& r, std::int64_t pixels) : r_(r), px_(pixels) {}

  void conv(const std::string& name, std::int64_t cin, std::int64_t cout, std::int64_t k, std::int64_t groups = 1) {
    push(name, cout * (cin / groups) * k * k + cout, px_ * cout * (cin / groups) * k * k);
  }
  void depthwise(const std::string& name, std::int64_t c, std::int64_t k) { push(name, c * k * k + c, px_ * c * k * k); }
  void norm(const std::string& name, std::int64_t c) { push(name, 2 * c, 0); }
  void push(const std::string& name, std::int64_t params, std::int64_t macs) {
    r_.rows.push_back({name, params, macs});
    r_.total_params += params;
    r_.total_macs += macs;
  }
  std::int64_t pixels() const { return px_; }

 private:
  CostReport& r_;
  std::int64_t px_;
};

void count_ffn(Counter& c, const std::string& name, const ModelConfig& cfg) {
  const std::int64_t hid = ffn_hidden_channels(cfg.channels, cfg.ffn_ratio);
  c.norm(name + ".norm", cfg.channels);
  c.conv(name + ".proj_in", cfg.channels, 2 * hid, 1);
  c.depthwise(name + ".spatial", 2 * hid, 3);
  c.conv(name + ".proj_out", hid, cfg.channels, 1);
}

void count_local(Counter& c, const std::string& name, const ModelConfig& cfg) {
  const std::int64_t ch = cfg.channels;
  if (cfg.local_variant == LocalVariant::kMhdlsa) {
    const std::int64_t sq = squeezed_channels(ch, cfg.gamma);
    c.norm(name + ".norm", ch);
    c.conv(name + ".proj", ch, ch, 1);
    c.conv(name + ".gen_squeeze", ch, sq, 1);
    c.depthwise(name + ".gen_spatial", sq, 7);
    c.conv(name + ".gen_expand", sq, cfg.heads * cfg.k * cfg.k, 1);
    c.push(name + ".aggregate", 0, c.pixels() * ch * cfg.k * cfg.k);
  } else {
    c.norm(name + ".norm", ch);
    c.conv(name + ".qkv", ch, 3 * ch, 1);
    c.push(name + ".attention", 0, 2 * c.pixels() * std::int64_t(cfg.mhsa_window) * cfg.mhsa_window * ch);
    c.conv(name + ".proj_out", ch, ch, 1);
  }
  count_ffn(c, name + ".ffn", cfg);
}

void count_global(Counter& c, const std::string& name, const ModelConfig& cfg) {
  const std::int64_t ch = cfg.channels;
  c.norm(name + ".norm", ch);
  c.conv(name + ".qkv", ch, 3 * ch, 1);
  c.depthwise(name + ".qkv_spatial", 3 * ch, 3);
  c.push(name + ".log_alpha", cfg.heads, 0);
  c.push(name + ".attention", 0, 2 * c.pixels() * ch * ch / cfg.heads);
  c.conv(name + ".proj_out", ch, ch, 1);
  count_ffn(c, name + ".ffn", cfg);
}

void count_model(Counter& c, const ModelConfig& cfg) {
  cfg.validate();
  c.conv("head", cfg.in_channels, cfg.channels, 3);
  for (int g = 0; g < cfg.num_groups; ++g) {
    const std::string gname = "groups." + std::to_string(g);
    for (int b = 0; b < cfg.blocks_per_group; ++b) {
      const std::string bname = gname + ".blocks." + std::to_string(b);
      switch (cfg.block_layout) {
        case BlockLayout::kHybrid:
          count_local(c, bname + ".local", cfg);
          count_global(c, bname + ".global", cfg);
          break;
        case BlockLayout::kLocalOnly:
          count_local(c, bname + ".local", cfg);
          count_local(c, bname + ".local2", cfg);
          break;
        case BlockLayout::kGlobalOnly:
          count_global(c, bname + ".global", cfg);
          count_global(c, bname + ".global2", cfg);
          break;
      }
    }
    c.conv(gname + ".conv", cfg.channels, cfg.channels, 3);
  }
  c.conv("tail", cfg.channels, std::int64_t(cfg.in_channels) * cfg.scale * cfg.scale, 3);
}

}  // namespace

CostReport count_params(const ModelConfig& cfg) {
  CostReport r;
  r.config = cfg;
  Counter c(r, 0);
  count_model(c, cfg);
  return r;
}

CostReport count_macs(const ModelConfig& cfg, int out_w, int out_h) {
  cfg.validate();
  if (out_w < 1 || out_h < 1) throw UsageError("resolution must be positive");
  const std::int64_t area = std::int64_t(out_w) * out_h;
  const std::int64_t s2 = std::int64_t(cfg.scale) * cfg.scale;
  if (area % s2 != 0) {
    throw UsageError("output area " + std::to_string(out_w) + "x" + std::to_string(out_h) +
                     " is not divisible by scale^2 = " + std::to_string(s2));
  }
  CostReport r;
  r.config = cfg;
  r.out_w = out_w;
  r.out_h = out_h;
  r.lr_pixels = area / s2;
  Counter c(r, r.lr_pixels);
  count_model(c, cfg);
  return r;
}

namespace {

std::string header(const CostReport& r) {
  std::ostringstream os;
  const auto& c = r.config;
  os << "# cost report (1 MAC = 1 FLOP)\n"
     << "# groups=" << c.num_groups << " blocks=" << c.blocks_per_group << " channels=" << c.channels
     << " heads=" << c.heads << " scale=" << c.scale << "\n"
     << "# K=" << c.k << " gamma=" << c.gamma << " ffn_ratio=" << c.ffn_ratio
     << " layout=" << to_string(c.block_layout) << " local=" << to_string(c.local_variant) << "\n";
  if (r.out_w > 0) {
    os << "# output " << r.out_w << "x" << r.out_h << ", network runs on " << r.lr_pixels << " LR pixels\n";
  }
  return os.str();
}

}  // namespace

std::string format_report_text(const CostReport& r, bool per_layer) {
  std::ostringstream os;
  os << header(r);
  std::size_t width = 5;
  for (const auto& row : r.rows) width = std::max(width, row.name.size());
  char line[512];
  if (per_layer) {
    std::snprintf(line, sizeof line, "%-*s %12s %16s\n", static_cast<int>(width), "layer", "params", "macs");
    os << line;
    for (const auto& row : r.rows) {
      std::snprintf(line, sizeof line, "%-*s %12lld %16lld\n", static_cast<int>(width), row.name.c_str(),
                    static_cast<long long>(row.params), static_cast<long long>(row.macs));
      os << line;
    }
  }
  std::snprintf(line, sizeof line, "%-*s %12lld %16lld\n", static_cast<int>(width), "total",
                static_cast<long long>(r.total_params), static_cast<long long>(r.total_macs));
  os << line;
  std::snprintf(line, sizeof line, "params %.3f M", r.total_params / 1e6);
  os << line;
  if (r.out_w > 0) {
    std::snprintf(line, sizeof line, ", macs %.1f G", r.total_macs / 1e9);
    os << line;
  }
  os << "\n";
  return os.str();
}

std::string format_report_csv(const CostReport& r) {
  std::ostringstream os;
  os << "name,params,macs\n";
  for (const auto& row : r.rows) os << row.name << "," << row.params << "," << row.macs << "\n";
  os << "total," << r.total_params << "," << r.total_macs << "\n";
  return os.str();
}

std::vector<SensitivityRow> sensitivity_table(const ModelConfig& base, int out_w, int out_h) {
  std::vector<SensitivityRow> rows;
  for (int k : {3, 5})
    for (double gamma : {0.25, 0.5, 1.0})
      for (double e : {2.0, 2.66}) {
        ModelConfig c = base;
        c.k = k;
        c.gamma = gamma;
        c.ffn_ratio = e;
        SensitivityRow row{k, gamma, e, true, 0, 0};
        try {
          const CostReport r = count_macs(c, out_w, out_h);
          row.params = r.total_params;
          row.macs = r.total_macs;
        } catch (const ConfigError&) {
          row.valid = false;
        }
        rows.push_back(row);
      }
  return rows;
}

std::string format_sensitivity(const std::vector<SensitivityRow>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%3s %6s %6s %12s %10s\n", "K", "gamma", "e", "params(M)", "macs(G)");
  os << line;
  for (const auto& r : rows) {
    if (r.valid) {
      std::snprintf(line, sizeof line, "%3d %6.2f %6.2f %12.3f %10.1f\n", r.k, r.gamma, r.ffn_ratio, r.params / 1e6,
                    r.macs / 1e9);
    } else {
      std::snprintf(line, sizeof line, "%3d %6.2f %6.2f %12s %10s  (gamma*channels not integral)\n", r.k, r.gamma,
                    r.ffn_ratio, "-", "-");
    }
    os << line;
  }
  return os.str();
}

}  // namespace dlgsa
