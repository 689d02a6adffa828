// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/config_file.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "dlgsa/serialize.hpp"

namespace dlgsa {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const KeyValue& kv, const std::string& why) {
  throw ConfigError("line " + std::to_string(kv.line) + ": " + kv.key + ": " + why);
}

template <typename I>
I to_int(const KeyValue& kv, std::string_view s) {
  I v{};
  const std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) bad(kv, "expected an integer, got '" + t + "'");
  return v;
}

double to_double(const KeyValue& kv, std::string_view s) {
  const std::string t = trim(s);
  std::istringstream is(t);
  double v = 0;
  is >> v;
  if (!is || !is.eof() || t.empty()) {
    // Allow simple fractions such as 1/2 for gamma.
    const auto slash = t.find('/');
    if (slash != std::string::npos) {
      const double num = to_double(kv, t.substr(0, slash));
      const double den = to_double(kv, t.substr(slash + 1));
      if (den == 0) bad(kv, "division by zero");
      return num / den;
    }
    bad(kv, "expected a number, got '" + t + "'");
  }
  return v;
}

bool to_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  bad(kv, "expected true or false");
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    out.push_back(trim(s.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

DatasetSpec parse_dataset(const KeyValue& kv) {
  const auto open = kv.value.find('(');
  const auto close = kv.value.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open || close != kv.value.size() - 1) {
    bad(kv, "expected synthetic(seed, count, size) or directory(path)");
  }
  const std::string kind = trim(std::string_view(kv.value).substr(0, open));
  const std::string args = kv.value.substr(open + 1, close - open - 1);
  DatasetSpec d;
  if (kind == "synthetic") {
    const auto parts = split_commas(args);
    if (parts.size() != 3) bad(kv, "synthetic needs (seed, count, size)");
    d.kind = DatasetKind::kSynthetic;
    d.seed = to_int<std::uint64_t>(kv, parts[0]);
    d.count = to_int<int>(kv, parts[1]);
    d.size = to_int<int>(kv, parts[2]);
  } else if (kind == "directory") {
    d.kind = DatasetKind::kDirectory;
    d.path = trim(args);
    if (d.path.empty()) bad(kv, "directory needs a path");
  } else {
    bad(kv, "unknown dataset kind '" + kind + "'");
  }
  return d;
}

std::string dataset_text(const DatasetSpec& d) {
  if (d.kind == DatasetKind::kDirectory) return "directory(" + d.path + ")";
  return "synthetic(" + std::to_string(d.seed) + ", " + std::to_string(d.count) + ", " + std::to_string(d.size) + ")";
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::string_view text) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    KeyValue kv{trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)), line_no};
    if (kv.key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(kv.key).second) bad(kv, "given more than once");
    out.push_back(std::move(kv));
  }
  return out;
}

TrainConfig train_config_from_text(std::string_view text) {
  const auto kvs = parse_key_values(text);
  TrainConfig c;
  int scale = c.model.scale;
  for (const auto& kv : kvs) {
    if (kv.key == "model") {
      try {
        c.model = model_preset(kv.value, scale);
      } catch (const ConfigError& e) {
        bad(kv, e.what());
      }
    }
  }
  for (const auto& kv : kvs) {
    const std::string& k = kv.key;
    const std::string& v = kv.value;
    ModelConfig& m = c.model;
    if (k == "model") continue;
    else if (k == "num_groups") m.num_groups = to_int<int>(kv, v);
    else if (k == "blocks_per_group") m.blocks_per_group = to_int<int>(kv, v);
    else if (k == "channels") m.channels = to_int<std::int64_t>(kv, v);
    else if (k == "heads") m.heads = to_int<std::int64_t>(kv, v);
    else if (k == "scale") m.scale = to_int<int>(kv, v);
    else if (k == "k") m.k = to_int<int>(kv, v);
    else if (k == "gamma") m.gamma = to_double(kv, v);
    else if (k == "ffn_ratio") m.ffn_ratio = to_double(kv, v);
    else if (k == "in_channels") m.in_channels = to_int<int>(kv, v);
    else if (k == "attention_variant") m.attention_variant = parse_attention_gate(v);
    else if (k == "local_variant") m.local_variant = parse_local_variant(v);
    else if (k == "block_layout") m.block_layout = parse_block_layout(v);
    else if (k == "normalize_qk") m.normalize_qk = to_bool(kv);
    else if (k == "mhsa_window") m.mhsa_window = to_int<int>(kv, v);
    else if (k == "batch") c.batch = to_int<int>(kv, v);
    else if (k == "patch") c.patch = to_int<int>(kv, v);
    else if (k == "lr0") c.lr0 = to_double(kv, v);
    else if (k == "milestones") {
      c.milestones.clear();
      if (!v.empty())
        for (const auto& part : split_commas(v)) c.milestones.push_back(to_int<std::int64_t>(kv, part));
    } else if (k == "lr_decay") c.lr_decay = to_double(kv, v);
    else if (k == "total_iters") c.total_iters = to_int<std::int64_t>(kv, v);
    else if (k == "seed") c.seed = to_int<std::uint64_t>(kv, v);
    else if (k == "loss") {
      if (v != "l1") bad(kv, "only l1 is supported");
      c.loss = v;
    } else if (k == "dataset") c.dataset = parse_dataset(kv);
    else if (k == "eval_interval") c.eval_interval = to_int<std::int64_t>(kv, v);
    else if (k == "log_interval") c.log_interval = to_int<std::int64_t>(kv, v);
    else if (k == "tlc") c.tlc = to_bool(kv);
    else if (k == "tlc_window") c.tlc_window = to_int<int>(kv, v);
    else if (k == "augment") c.augment = to_bool(kv);
    else bad(kv, "unknown key");
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  const auto bytes = read_file(path);
  return train_config_from_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string train_config_to_text(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << c.model.fingerprint();
  os << "batch=" << c.batch << "\n"
     << "patch=" << c.patch << "\n"
     << "lr0=" << c.lr0 << "\n"
     << "milestones=";
  for (std::size_t i = 0; i < c.milestones.size(); ++i) os << (i ? ", " : "") << c.milestones[i];
  os << "\n"
     << "lr_decay=" << c.lr_decay << "\n"
     << "total_iters=" << c.total_iters << "\n"
     << "seed=" << c.seed << "\n"
     << "loss=" << c.loss << "\n"
     << "dataset=" << dataset_text(c.dataset) << "\n"
     << "eval_interval=" << c.eval_interval << "\n"
     << "log_interval=" << c.log_interval << "\n"
     << "tlc=" << (c.tlc ? "true" : "false") << "\n"
     << "tlc_window=" << c.tlc_window << "\n"
     << "augment=" << (c.augment ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace dlgsa
