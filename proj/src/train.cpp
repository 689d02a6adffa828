// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <ostream>
#include <sstream>

#include "dlgsa/autograd.hpp"
#include "dlgsa/config_file.hpp"
#include "dlgsa/serialize.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace dlgsa {

// ---------------------------------------------------------------------------
// Loss, optimizer, schedule

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (!(pred.shape() == target.shape())) {
    throw DimensionError("l1_loss: " + pred.shape().str() + " vs " + target.shape().str());
  }
  const auto p = pred.data();
  const auto t = target.data();
  T acc = T(0);
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::fabs(p[i] - t[i]);
  const T inv_n = T(1) / static_cast<T>(p.size());
  Tensor<T> out = Tensor<T>::scalar(acc * inv_n);
  detail::record(out, "l1_loss", {&pred, &target}, [pred, target, inv_n](const detail::TensorImpl<T>& o) {
    T* gp = detail::grad_target(pred);
    T* gt = detail::grad_target(target);
    const T g = o.grad[0] * inv_n;
    const auto p = pred.data();
    const auto t = target.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const T d = p[i] - t[i];
      const T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
      if (gp) gp[i] += s;
      if (gt) gt[i] -= s;
    }
  });
  return out;
}

template <typename T>
void adam_step(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v, std::int64_t t,
               double lr, const AdamOptions& opt) {
  if (t < 1) throw UsageError("adam_step: t must be >= 1");
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw DimensionError("adam_step: buffer sizes differ");
  }
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = opt.beta1 * m[i] + (1.0 - opt.beta1) * g;
    const double vi = opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    param[i] = static_cast<T>(param[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + opt.eps));
  }
}

double lr_multistep(std::int64_t iter, double lr0, const std::vector<std::int64_t>& milestones, double factor) {
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) throw ConfigError("milestones must be strictly increasing");
  }
  double lr = lr0;
  for (std::int64_t m : milestones) {
    if (m <= iter) lr *= factor;
  }
  return lr;
}

std::vector<std::int64_t> default_milestones(std::int64_t total_iters) {
  std::vector<std::int64_t> out;
  for (double f : {0.5, 0.75, 0.9}) {
    const auto m = static_cast<std::int64_t>(f * static_cast<double>(total_iters));
    if (m > 0 && (out.empty() || m > out.back())) out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration and data

std::vector<std::int64_t> TrainConfig::effective_milestones() const {
  return milestones.empty() ? default_milestones(total_iters) : milestones;
}

void TrainConfig::validate() const {
  model.validate();
  if (batch < 1) throw ConfigError("batch: must be >= 1");
  if (patch < model.k) throw ConfigError("patch: must be at least the dynamic kernel size");
  if (!(lr0 > 0.0)) throw ConfigError("lr0: must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay: must be in (0, 1]");
  if (total_iters < 0) throw ConfigError("total_iters: must be >= 0");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) throw ConfigError("milestones: must be strictly increasing");
  }
  if (eval_interval < 0) throw ConfigError("eval_interval: must be >= 0");
  if (log_interval < 0) throw ConfigError("log_interval: must be >= 0");
  if (tlc_window < 0) throw ConfigError("tlc_window: must be >= 0");
  if (dataset.kind == DatasetKind::kSynthetic) {
    if (dataset.count < 1) throw ConfigError("dataset: count must be >= 1");
    if (dataset.size < patch * model.scale) {
      throw ConfigError("dataset: image size " + std::to_string(dataset.size) + " is smaller than patch * scale = " +
                        std::to_string(patch * model.scale));
    }
  }
}

TrainConfig overfit_benchmark_config() {
  TrainConfig c;
  c.model = model_preset("tiny", 2);
  c.batch = 8;
  c.patch = 16;
  c.lr0 = 5e-4;
  c.total_iters = 2000;
  c.seed = 0;
  c.dataset = DatasetSpec{DatasetKind::kSynthetic, 0, 8, 64, ""};
  c.augment = false;
  c.log_interval = 250;
  return c;
}

Dataset load_dataset(const DatasetSpec& spec) {
  Dataset d;
  if (spec.kind == DatasetKind::kSynthetic) {
    static constexpr SynthFamily kFamilies[] = {SynthFamily::kStripes, SynthFamily::kChecker, SynthFamily::kBlobs,
                                                SynthFamily::kMixed};
    for (int j = 0; j < spec.count; ++j) {
      const SynthFamily fam = kFamilies[j % 4];
      d.images.push_back(synth_image(spec.seed + j, spec.size, spec.size, fam));
      d.names.push_back("synth" + std::to_string(j) + "_" + std::string(synth_family_name(fam)));
    }
    return d;
  }
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(spec.path) / "HR";
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("dataset directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  }
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  if (files.empty()) throw IoError("no .ppm files in " + dir.string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    d.images.push_back(load_ppm(f.string()));
    d.names.push_back(f.stem().string());
  }
  return d;
}

ImageRGB8 modcrop(const ImageRGB8& img, int scale) {
  const int w = img.width - img.width % scale, h = img.height - img.height % scale;
  if (w < 1 || h < 1) throw DimensionError("image smaller than the scale factor");
  if (w == img.width && h == img.height) return img;
  ImageRGB8 out(w, h);
  for (int y = 0; y < h; ++y)
    std::copy_n(img.pixels.begin() + 3 * static_cast<std::ptrdiff_t>(y) * img.width, 3 * w,
                out.pixels.begin() + 3 * static_cast<std::ptrdiff_t>(y) * w);
  return out;
}

TensorF dihedral(const TensorF& x, int which) {
  const Shape s = x.shape();
  const bool transpose = (which & 4) != 0, flip_v = (which & 1) != 0, flip_h = (which & 2) != 0;
  const std::int64_t oh = transpose ? s.w : s.h, ow = transpose ? s.h : s.w;
  TensorF out(Shape{s.n, s.c, oh, ow});
  auto od = out.mutable_data();
  auto xd = x.data();
  for (std::int64_t p = 0; p < s.n * s.c; ++p)
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t xx = 0; xx < ow; ++xx) {
        const std::int64_t ty = flip_v ? oh - 1 - y : y;
        const std::int64_t tx = flip_h ? ow - 1 - xx : xx;
        const std::int64_t sy = transpose ? tx : ty, sx = transpose ? ty : tx;
        od[(p * oh + y) * ow + xx] = xd[(p * s.h + sy) * s.w + sx];
      }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

template <typename T>
EvalResult evaluate(const DlgsaNet<T>& net, const std::vector<ImageRGB8>& hr_images, int tlc_window,
                    const std::vector<std::string>& names) {
  NoGradGuard no_grad;
  const int s = net.cfg.scale;
  EvalResult r;
  int ok = 0;
  for (std::size_t i = 0; i < hr_images.size(); ++i) {
    ImageScore score;
    score.name = i < names.size() ? names[i] : "image" + std::to_string(i);
    try {
      const ImageRGB8 hr = modcrop(hr_images[i], s);
      const TensorF lr = bicubic_resize(image_to_tensor(hr), hr.width / s, hr.height / s);
      ForwardOptions opt;
      opt.tlc_window = tlc_window;
      const TensorF sr = cast<float>(model_forward(cast<T>(lr), net, opt));
      const TensorF up = bicubic_resize(lr, hr.width, hr.height);
      const PlaneF32 y_ref = rgb_to_y(hr);
      const PlaneF32 y_sr = rgb_to_y(tensor_to_image(sr));
      const PlaneF32 y_up = rgb_to_y(tensor_to_image(up));
      score.psnr = psnr(y_ref, y_sr, s);
      score.bicubic_psnr = psnr(y_ref, y_up, s);
      score.ssim = ssim(crop(y_ref, s), crop(y_sr, s));
      score.bicubic_ssim = ssim(crop(y_ref, s), crop(y_up, s));
      r.mean_psnr += score.psnr;
      r.mean_ssim += score.ssim;
      r.mean_bicubic_psnr += score.bicubic_psnr;
      r.mean_bicubic_ssim += score.bicubic_ssim;
      ++ok;
    } catch (const Error& e) {
      score.error = e.what();
    }
    r.images.push_back(score);
  }
  if (ok > 0) {
    r.mean_psnr /= ok;
    r.mean_ssim /= ok;
    r.mean_bicubic_psnr /= ok;
    r.mean_bicubic_ssim /= ok;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr char kCkptMagic[4] = {'D', 'L', 'G', 'C'};
constexpr std::uint32_t kCkptVersion = 1;
}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<T>& ck) {
  ByteWriter w;
  w.bytes(kCkptMagic, 4);
  w.u32(kCkptVersion);
  w.str(train_config_to_text(ck.config));
  w.u64(static_cast<std::uint64_t>(ck.iteration));
  w.u64(ck.rng_state);
  w.u32(static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, t] : ck.params) {
    w.str(name);
    write_tensor(w, t);
    auto m = ck.adam_m.find(name);
    auto v = ck.adam_v.find(name);
    write_tensor(w, m != ck.adam_m.end() ? m->second : Tensor<T>(t.shape()));
    write_tensor(w, v != ck.adam_v.end() ? v->second : Tensor<T>(t.shape()));
  }
  return w.take();
}

template <typename T>
Checkpoint<T> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kCkptMagic)) throw ParseError("not a checkpoint", 0);
  const std::size_t vpos = r.offset();
  if (r.u32() != kCkptVersion) throw ParseError("unsupported checkpoint version", vpos);
  Checkpoint<T> ck;
  const std::size_t cpos = r.offset();
  try {
    ck.config = train_config_from_text(r.str());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("bad checkpoint config: ") + e.what(), cpos);
  }
  ck.iteration = static_cast<std::int64_t>(r.u64());
  ck.rng_state = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.str();
    ck.params[name] = read_tensor<T>(r);
    ck.adam_m[name] = read_tensor<T>(r);
    ck.adam_v[name] = read_tensor<T>(r);
  }
  if (!r.at_end()) throw ParseError("trailing bytes after checkpoint", r.offset());
  return ck;
}

template <typename T>
void save_checkpoint(const std::string& path, const Checkpoint<T>& ck) {
  write_file(path, encode_checkpoint(ck));
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  try {
    return decode_checkpoint<T>(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.offset());
  }
}

namespace {

template <typename T>
void copy_into(Tensor<T>& dst, const Tensor<T>& src, const std::string& name) {
  if (!(dst.shape() == src.shape())) {
    throw ConfigError("checkpoint tensor " + name + " has shape " + src.shape().str() + ", model expects " +
                      dst.shape().str());
  }
  std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
}

template <typename T>
const Tensor<T>& lookup(const std::map<std::string, Tensor<T>>& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw ConfigError("checkpoint lacks tensor " + name);
  return it->second;
}

}  // namespace

template <typename T>
DlgsaNet<T> model_from_checkpoint(const Checkpoint<T>& ck) {
  DlgsaNet<T> net = build_model<T>(ck.config.model, 0);
  if (ck.params.size() != net.store.items().size()) throw ConfigError("checkpoint parameter count differs from model");
  for (auto& [name, t] : net.store.items()) {
    Tensor<T> dst = t;
    copy_into(dst, lookup(ck.params, name), name);
  }
  return net;
}

// ---------------------------------------------------------------------------
// Trainer

namespace {
constexpr std::uint64_t kSamplerSalt = 0x5eed5a3c1e0f7b21ULL;

// Training allocates and frees the same large activation buffers every step.
// Keeping them in the heap instead of returning them to the OS avoids a page
// fault storm on each allocation.
void keep_freed_memory() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}
}  // namespace

template <typename T>
Trainer<T>::Trainer(const TrainConfig& cfg, std::vector<ImageRGB8> hr_images)
    : cfg_(cfg), images_(std::move(hr_images)), net_(build_model<T>(cfg.model, cfg.seed)), rng_(cfg.seed ^ kSamplerSalt) {
  cfg_.validate();
  if (images_.empty()) throw UsageError("training needs at least one image");
  keep_freed_memory();
  const int side = cfg_.patch * cfg_.model.scale;
  for (const auto& img : images_) {
    if (img.width < side || img.height < side) {
      throw ConfigError("patch: HR patch " + std::to_string(side) + " exceeds an image of " + std::to_string(img.width) +
                        "x" + std::to_string(img.height));
    }
    hr_.push_back(image_to_tensor(img));
  }
  for (const auto& [name, t] : net_.store.items()) {
    m_.emplace_back(t.shape());
    v_.emplace_back(t.shape());
  }
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> Trainer<T>::sample_batch() {
  const int p = cfg_.patch, s = cfg_.model.scale, side = p * s;
  const std::int64_t b = cfg_.batch;
  std::vector<T> lr_buf, hr_buf;
  lr_buf.reserve(static_cast<std::size_t>(b * 3 * p * p));
  hr_buf.reserve(static_cast<std::size_t>(b * 3 * side * side));
  for (std::int64_t i = 0; i < b; ++i) {
    const TensorF& img = hr_[static_cast<std::size_t>(rng_.below(static_cast<std::int64_t>(hr_.size())))];
    const Shape is = img.shape();
    const std::int64_t y0 = rng_.below(is.h - side + 1), x0 = rng_.below(is.w - side + 1);
    TensorF patch(Shape{1, 3, side, side});
    auto pd = patch.mutable_data();
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < side; ++y)
        std::copy_n(img.data().data() + (c * is.h + y0 + y) * is.w + x0, side, pd.data() + (c * side + y) * side);
    if (cfg_.augment) patch = dihedral(patch, static_cast<int>(rng_.below(8)));
    const TensorF lr = bicubic_resize(patch, p, p);
    lr_buf.insert(lr_buf.end(), lr.data().begin(), lr.data().end());
    hr_buf.insert(hr_buf.end(), patch.data().begin(), patch.data().end());
  }
  return {Tensor<T>(Shape{b, 3, p, p}, std::move(lr_buf)), Tensor<T>(Shape{b, 3, side, side}, std::move(hr_buf))};
}

template <typename T>
double Trainer<T>::step() {
  auto [lr, hr] = sample_batch();
  net_.store.zero_grad();
  const Tensor<T> loss = l1_loss(model_forward(lr, net_), hr);
  const double value = loss.item();
  if (!std::isfinite(value)) {
    const std::string where = first_nonfinite_stage(net_, lr);
    throw NumericError("non-finite loss at iteration " + std::to_string(iter_) +
                       (where.empty() ? std::string("") : "; first non-finite stage: " + where));
  }
  loss.backward();
  const double rate = lr_multistep(iter_, cfg_.lr0, cfg_.effective_milestones(), cfg_.lr_decay);
  ++iter_;
  auto& items = net_.store.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor<T> p = items[i].second;
    const auto g = p.mutable_grad();
    adam_step<T>(p.mutable_data(), std::span<const T>(g.data(), g.size()), m_[i].mutable_data(), v_[i].mutable_data(),
                 iter_, rate);
  }
  return value;
}

template <typename T>
Checkpoint<T> Trainer<T>::checkpoint() const {
  Checkpoint<T> ck;
  ck.config = cfg_;
  ck.iteration = iter_;
  ck.rng_state = rng_.state();
  const auto& items = net_.store.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    ck.params[items[i].first] = items[i].second.detach();
    ck.adam_m[items[i].first] = m_[i].detach();
    ck.adam_v[items[i].first] = v_[i].detach();
  }
  return ck;
}

template <typename T>
void Trainer<T>::restore(const Checkpoint<T>& ck) {
  if (ck.config.model.fingerprint() != cfg_.model.fingerprint()) {
    throw ConfigError("checkpoint model configuration differs from the trainer's");
  }
  const auto& items = net_.store.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string& name = items[i].first;
    Tensor<T> p = items[i].second;
    copy_into(p, lookup(ck.params, name), name);
    copy_into(m_[i], lookup(ck.adam_m, name), name);
    copy_into(v_[i], lookup(ck.adam_v, name), name);
  }
  iter_ = ck.iteration;
  rng_.set_state(ck.rng_state);
}

template <typename T>
std::string first_nonfinite_stage(const DlgsaNet<T>& net, const Tensor<T>& lr) {
  NoGradGuard no_grad;
  auto finite = [](const Tensor<T>& t) {
    return std::all_of(t.data().begin(), t.data().end(), [](T v) { return std::isfinite(v); });
  };
  if (!finite(lr)) return "input";
  const Tensor<T> f = net.head(lr);
  if (!finite(f)) return "head";
  Tensor<T> z = f;
  for (std::size_t g = 0; g < net.groups.size(); ++g) {
    Tensor<T> h = z;
    for (const auto& block : net.groups[g].blocks)
      for (const auto& st : block.stages) {
        HdtbParams<T> one;
        one.stages.push_back(st);
        h = hdtb_forward(h, one);
        if (!finite(h)) return st.name;
      }
    z = add(net.groups[g].conv(h), z);
    if (!finite(z)) return "groups." + std::to_string(g) + ".conv";
  }
  if (!finite(net.tail(add(z, f)))) return "tail";
  return "";
}

template <typename T>
TrainLog run_training(Trainer<T>& trainer, std::ostream* progress) {
  TrainLog log;
  const TrainConfig& cfg = trainer.config();
  const int tlc_window = cfg.tlc ? (cfg.tlc_window > 0 ? cfg.tlc_window : cfg.patch) : 0;
  while (trainer.iteration() < cfg.total_iters) {
    const std::int64_t it = trainer.iteration();
    const double loss = trainer.step();
    log.losses.push_back(loss);
    if (progress && cfg.log_interval > 0 && (it % cfg.log_interval == 0 || it + 1 == cfg.total_iters)) {
      *progress << "iter " << it << " loss " << loss << "\n" << std::flush;
    }
    if (cfg.eval_interval > 0 && (it + 1) % cfg.eval_interval == 0) {
      EvalResult r = evaluate(trainer.model(), trainer.images(), tlc_window);
      if (progress) *progress << "iter " << it + 1 << " train psnr " << r.mean_psnr << " ssim " << r.mean_ssim << "\n";
      log.evals.emplace_back(it + 1, std::move(r));
    }
  }
  return log;
}

std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const std::string& suite,
                                                                   const TrainConfig& base) {
  std::vector<std::pair<std::string, TrainConfig>> variants;
  TrainConfig cfg = base;
  if (suite == "hdtb") {
    for (BlockLayout l : {BlockLayout::kHybrid, BlockLayout::kLocalOnly, BlockLayout::kGlobalOnly}) {
      cfg.model.block_layout = l;
      variants.emplace_back(std::string(to_string(l)), cfg);
    }
  } else if (suite == "attention") {
    for (AttentionGate g : {AttentionGate::kRelu, AttentionGate::kSoftmax}) {
      cfg.model.attention_variant = g;
      variants.emplace_back(std::string(to_string(g)), cfg);
    }
  } else if (suite == "local") {
    for (LocalVariant v : {LocalVariant::kMhdlsa, LocalVariant::kMhsa}) {
      cfg.model.local_variant = v;
      variants.emplace_back(std::string(to_string(v)), cfg);
    }
  } else {
    throw UsageError("unknown ablation suite '" + suite + "' (hdtb, attention, local)");
  }
  return variants;
}

AblationRow run_ablation_variant(const std::string& name, const TrainConfig& cfg, const Dataset& data,
                                 std::ostream* progress) {
  Trainer<float> trainer(cfg, data.images);
  const TrainLog log = run_training(trainer, progress);
  const EvalResult r = evaluate(trainer.model(), data.images);
  AblationRow row;
  row.variant = name;
  row.train_psnr = r.mean_psnr;
  row.bicubic_psnr = r.mean_bicubic_psnr;
  row.final_loss = log.losses.empty() ? 0.0 : log.losses.back();
  row.params = trainer.model().store.total_elements();
  if (progress) *progress << name << ": train psnr " << row.train_psnr << " dB\n";
  return row;
}

std::vector<AblationRow> run_ablation(const std::string& suite, const TrainConfig& base, std::ostream* progress) {
  const auto variants = ablation_variants(suite, base);
  const Dataset data = load_dataset(base.dataset);
  std::vector<AblationRow> rows;
  for (const auto& [name, cfg] : variants) {
    if (progress) *progress << "== " << suite << ": " << name << "\n";
    rows.push_back(run_ablation_variant(name, cfg, data, progress));
  }
  return rows;
}

#define DLGSA_INSTANTIATE_TRAIN(T)                                                                             \
  template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&);                                              \
  template void adam_step(std::span<T>, std::span<const T>, std::span<T>, std::span<T>, std::int64_t, double,  \
                          const AdamOptions&);                                                                 \
  template EvalResult evaluate(const DlgsaNet<T>&, const std::vector<ImageRGB8>&, int,                         \
                               const std::vector<std::string>&);                                               \
  template std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<T>&);                                  \
  template Checkpoint<T> decode_checkpoint(const std::vector<std::uint8_t>&);                                  \
  template void save_checkpoint(const std::string&, const Checkpoint<T>&);                                     \
  template Checkpoint<T> load_checkpoint(const std::string&);                                                  \
  template DlgsaNet<T> model_from_checkpoint(const Checkpoint<T>&);                                            \
  template class Trainer<T>;                                                                                   \
  template std::string first_nonfinite_stage(const DlgsaNet<T>&, const Tensor<T>&);                            \
  template TrainLog run_training(Trainer<T>&, std::ostream*);

DLGSA_INSTANTIATE_TRAIN(float)
DLGSA_INSTANTIATE_TRAIN(double)

}  // namespace dlgsa
