// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dlgsa/serialize.hpp"

namespace dlgsa {

// ---------------------------------------------------------------------------
// PPM

namespace {

bool is_space(std::uint8_t b) { return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f'; }

class HeaderLexer {
 public:
  explicit HeaderLexer(const std::vector<std::uint8_t>& b) : b_(b) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (is_space(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    if (pos_ >= b_.size()) throw ParseError(std::string("missing ") + what, pos_);
    long v = 0;
    while (pos_ < b_.size() && b_[pos_] >= '0' && b_[pos_] <= '9') {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1 << 24) throw ParseError(std::string(what) + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("expected ") + what, start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_end() const { return pos_ >= b_.size(); }
  std::uint8_t peek() const { return b_[pos_]; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 2;
};

}  // namespace

ImageRGB8 read_ppm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw ParseError("not a P6 file", 0);
  HeaderLexer lex(bytes);
  const std::size_t wpos = lex.pos();
  const long w = lex.number("width");
  const long h = lex.number("height");
  if (w <= 0 || h <= 0) throw ParseError("image dimensions must be positive", wpos);
  lex.skip_space_and_comments();
  const std::size_t mpos = lex.pos();
  const long maxval = lex.number("maxval");
  if (maxval != 255) throw ParseError("maxval " + std::to_string(maxval) + " unsupported (need 255)", mpos);
  if (lex.at_end() || !is_space(lex.peek())) throw ParseError("expected whitespace after maxval", lex.pos());
  lex.advance();
  const std::size_t payload = static_cast<std::size_t>(3) * w * h;
  if (bytes.size() - lex.pos() < payload) throw ParseError("truncated pixel data", bytes.size());
  ImageRGB8 img(static_cast<int>(w), static_cast<int>(h));
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(lex.pos()), payload, img.pixels.begin());
  return img;
}

std::vector<std::uint8_t> write_ppm(const ImageRGB8& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

ImageRGB8 load_ppm(const std::string& path) {
  try {
    return read_ppm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.offset());
  }
}

void save_ppm(const std::string& path, const ImageRGB8& img) { write_file(path, write_ppm(img)); }

// ---------------------------------------------------------------------------
// Color

namespace {
float luma(double r, double g, double b) {
  const double y = 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
  return static_cast<float>(std::clamp(y, 0.0, 255.0));
}
}  // namespace

PlaneF32 rgb_to_y(const ImageRGB8& img) {
  PlaneF32 out(img.width, img.height);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = luma(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
  }
  return out;
}

PlaneF32 tensor_to_y(const TensorF& rgb, std::int64_t index) {
  const Shape s = rgb.shape();
  if (s.c != 3 || index < 0 || index >= s.n) throw DimensionError("tensor_to_y needs [n,3,h,w], got " + s.str());
  PlaneF32 out(static_cast<int>(s.w), static_cast<int>(s.h));
  const float* base = rgb.data().data() + index * 3 * s.plane();
  for (std::int64_t i = 0; i < s.plane(); ++i) {
    auto ch = [&](int c) { return 255.0 * std::clamp(static_cast<double>(base[c * s.plane() + i]), 0.0, 1.0); };
    out.samples[i] = luma(ch(0), ch(1), ch(2));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resampling

double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::vector<int> index;     // 4 per output sample
  std::vector<double> weight;
};

Taps make_taps(int in_size, int out_size) {
  Taps t;
  t.index.resize(static_cast<std::size_t>(4) * out_size);
  t.weight.resize(t.index.size());
  const double scale = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const double base = std::floor(src);
    const double frac = src - base;
    for (int k = 0; k < 4; ++k) {
      const int i = static_cast<int>(base) - 1 + k;
      t.index[4 * o + k] = std::clamp(i, 0, in_size - 1);
      t.weight[4 * o + k] = cubic_weight(frac - (k - 1));
    }
  }
  return t;
}

// Resizes one plane of doubles or floats; `stride` separates planes.
template <typename In>
std::vector<double> resize_plane(const In* in, int w, int h, int ow, int oh) {
  const Taps tx = make_taps(w, ow);
  const Taps ty = make_taps(h, oh);
  std::vector<double> mid(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += tx.weight[4 * x + k] * static_cast<double>(in[y * w + tx.index[4 * x + k]]);
      mid[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += ty.weight[4 * y + k] * mid[static_cast<std::size_t>(ty.index[4 * y + k]) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

void check_resize_dims(int w, int h, int ow, int oh) {
  if (ow < 1 || oh < 1) throw ConfigError("bicubic_resize: output dimensions must be >= 1");
  if (w < 1 || h < 1) throw DimensionError("bicubic_resize: empty input");
}

}  // namespace

PlaneF32 bicubic_resize(const PlaneF32& in, int out_w, int out_h) {
  check_resize_dims(in.width, in.height, out_w, out_h);
  auto r = resize_plane(in.samples.data(), in.width, in.height, out_w, out_h);
  PlaneF32 out(out_w, out_h);
  std::transform(r.begin(), r.end(), out.samples.begin(), [](double v) { return static_cast<float>(v); });
  return out;
}

ImageRGB8 bicubic_resize(const ImageRGB8& in, int out_w, int out_h) {
  check_resize_dims(in.width, in.height, out_w, out_h);
  ImageRGB8 out(out_w, out_h);
  std::vector<double> plane(static_cast<std::size_t>(in.width) * in.height);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = in.pixels[3 * i + c];
    auto r = resize_plane(plane.data(), in.width, in.height, out_w, out_h);
    for (std::size_t i = 0; i < r.size(); ++i) {
      out.pixels[3 * i + c] = static_cast<std::uint8_t>(std::clamp(std::lround(r[i]), 0L, 255L));
    }
  }
  return out;
}

namespace {

template <typename T>
Tensor<T> resize_tensor(const Tensor<T>& in, int out_w, int out_h) {
  const Shape s = in.shape();
  check_resize_dims(static_cast<int>(s.w), static_cast<int>(s.h), out_w, out_h);
  Tensor<T> out(Shape{s.n, s.c, out_h, out_w});
  auto od = out.mutable_data();
  for (std::int64_t p = 0; p < s.n * s.c; ++p) {
    auto r = resize_plane(in.data().data() + p * s.plane(), static_cast<int>(s.w), static_cast<int>(s.h), out_w, out_h);
    std::transform(r.begin(), r.end(), od.begin() + p * out_w * out_h, [](double v) { return static_cast<T>(v); });
  }
  return out;
}

}  // namespace

TensorF bicubic_resize(const TensorF& in, int out_w, int out_h) { return resize_tensor(in, out_w, out_h); }

TensorD bicubic_resize(const TensorD& in, int out_w, int out_h) { return resize_tensor(in, out_w, out_h); }

// ---------------------------------------------------------------------------
// Metrics

PlaneF32 crop(const PlaneF32& p, int border) {
  if (border < 0) throw UsageError("negative crop");
  if (2 * border >= p.width || 2 * border >= p.height) throw UsageError("crop removes the whole plane");
  PlaneF32 out(p.width - 2 * border, p.height - 2 * border);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.samples[static_cast<std::size_t>(y) * out.width + x] = p.at(x + border, y + border);
  return out;
}

double psnr(const PlaneF32& ref, const PlaneF32& test, int border_crop) {
  if (ref.width != test.width || ref.height != test.height) throw UsageError("psnr: plane sizes differ");
  const PlaneF32 a = crop(ref, border_crop);
  const PlaneF32 b = crop(test, border_crop);
  double se = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.samples.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

constexpr int kSsimWin = 11;

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWin);
  double total = 0.0;
  for (int i = 0; i < kSsimWin; ++i) {
    const double d = i - kSsimWin / 2;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-mode separable filtering of a w x h field.
std::vector<double> filter_valid(const std::vector<double>& f, int w, int h, const std::vector<double>& g) {
  const int ow = w - kSsimWin + 1, oh = h - kSsimWin + 1;
  std::vector<double> mid(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWin; ++k) acc += g[k] * f[static_cast<std::size_t>(y) * w + x + k];
      mid[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWin; ++k) acc += g[k] * mid[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const PlaneF32& ref, const PlaneF32& test) {
  if (ref.width != test.width || ref.height != test.height) throw UsageError("ssim: plane sizes differ");
  if (ref.width < kSsimWin || ref.height < kSsimWin) throw UsageError("ssim: planes smaller than 11x11");
  const int w = ref.width, h = ref.height;
  const std::size_t n = ref.samples.size();
  std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = ref.samples[i];
    b[i] = test.samples[i];
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto g = gaussian_window();
  const auto mu_a = filter_valid(a, w, h, g);
  const auto mu_b = filter_valid(b, w, h, g);
  const auto e_aa = filter_valid(aa, w, h, g);
  const auto e_bb = filter_valid(bb, w, h, g);
  const auto e_ab = filter_valid(ab, w, h, g);
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

// ---------------------------------------------------------------------------
// Synthetic images

SynthFamily parse_synth_family(std::string_view name) {
  if (name == "stripes") return SynthFamily::kStripes;
  if (name == "checker") return SynthFamily::kChecker;
  if (name == "blobs") return SynthFamily::kBlobs;
  if (name == "mixed") return SynthFamily::kMixed;
  throw ConfigError("unknown synthetic family '" + std::string(name) + "'");
}

std::string_view synth_family_name(SynthFamily f) {
  switch (f) {
    case SynthFamily::kStripes: return "stripes";
    case SynthFamily::kChecker: return "checker";
    case SynthFamily::kBlobs: return "blobs";
    case SynthFamily::kMixed: return "mixed";
  }
  return "?";
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& r, double lo, double hi) {
  // Top 53 bits, so the stream is identical across standard libraries.
  const double u = static_cast<double>(r() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

// Pattern in [-1, 1] sampled at pixel centers.
std::vector<double> pattern(Rng& r, SynthFamily fam, int w, int h) {
  constexpr double kPi = std::numbers::pi;
  std::vector<double> p(static_cast<std::size_t>(w) * h);
  auto for_each = [&](auto fn) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) p[static_cast<std::size_t>(y) * w + x] = fn(x + 0.5, y + 0.5);
  };
  switch (fam) {
    case SynthFamily::kStripes: {
      const double th = uniform(r, -0.35, 0.35) + (uniform(r, 0, 1) < 0.5 ? kPi / 2 : 0.0);
      const double period = uniform(r, 6, 11);
      const double sharp = uniform(r, 1.5, 3);
      const double ph1 = uniform(r, 0, 6), ph2 = uniform(r, 0, 6);
      const double c = std::cos(th), s = std::sin(th);
      for_each([&](double x, double y) {
        const double u = x * c + y * s;
        return 0.8 * std::tanh(sharp * std::sin(2 * kPi / period * u + ph1)) + 0.2 * std::sin(kPi / period * u + ph2);
      });
      break;
    }
    case SynthFamily::kChecker: {
      const double cell = uniform(r, 4, 8);
      const double th = uniform(r, -0.3, 0.3);
      const double sharp = uniform(r, 2, 4);
      const double ph1 = uniform(r, 0, 6), ph2 = uniform(r, 0, 6);
      const double c = std::cos(th), s = std::sin(th);
      for_each([&](double x, double y) {
        const double u = x * c + y * s, v = -x * s + y * c;
        return std::tanh(sharp * std::sin(kPi * u / cell + ph1) * std::sin(kPi * v / cell + ph2));
      });
      break;
    }
    case SynthFamily::kBlobs: {
      const double size = std::min(w, h);
      struct Blob { double cx, cy, sigma, amp; };
      std::vector<Blob> blobs(12);
      for (auto& b : blobs) {
        b.cx = uniform(r, 0, w);
        b.cy = uniform(r, 0, h);
        b.sigma = uniform(r, size / 24, size / 8);
        b.amp = uniform(r, -1, 1);
      }
      for_each([&](double x, double y) {
        double v = 0.0;
        for (const auto& b : blobs) {
          const double dx = x - b.cx, dy = y - b.cy;
          v += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
        }
        return std::tanh(10 * v);
      });
      break;
    }
    case SynthFamily::kMixed: {
      const auto blobs = pattern(r, SynthFamily::kBlobs, w, h);
      const auto stripes = pattern(r, SynthFamily::kStripes, w, h);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.5 * blobs[i] + 0.5 * stripes[i];
      break;
    }
  }
  return p;
}

}  // namespace

ImageRGB8 synth_image(std::uint64_t seed, int w, int h, SynthFamily family) {
  if (w < 1 || h < 1) throw ConfigError("synth_image: dimensions must be >= 1");
  Rng r(seed);
  const auto p = pattern(r, family, w, h);
  double base[3], amp[3];
  for (double& b : base) b = uniform(r, 0.45, 0.55);
  for (double& a : amp) a = uniform(r, 0.35, 0.42);
  ImageRGB8 img(w, h);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      const double v = 255.0 * (base[c] + amp[c] * p[i]);
      img.pixels[3 * i + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return img;
}

// ---------------------------------------------------------------------------
// Tensor bridges

TensorF image_to_tensor(const ImageRGB8& img) {
  const std::int64_t plane = static_cast<std::int64_t>(img.width) * img.height;
  TensorF t(Shape{1, 3, img.height, img.width});
  auto d = t.mutable_data();
  for (std::int64_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) d[c * plane + i] = img.pixels[3 * i + c] / 255.0f;
  return t;
}

ImageRGB8 tensor_to_image(const TensorF& t, std::int64_t index) {
  const Shape s = t.shape();
  if (s.c != 3 || index < 0 || index >= s.n) throw DimensionError("tensor_to_image needs [n,3,h,w], got " + s.str());
  ImageRGB8 img(static_cast<int>(s.w), static_cast<int>(s.h));
  const float* base = t.data().data() + index * 3 * s.plane();
  for (std::int64_t i = 0; i < s.plane(); ++i)
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(base[c * s.plane() + i], 0.0f, 1.0f);
      img.pixels[3 * i + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  return img;
}

}  // namespace dlgsa
