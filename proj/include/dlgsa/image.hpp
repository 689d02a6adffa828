// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Image I/O, color conversion, resampling, quality metrics and the
// procedural training images.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dlgsa/tensor.hpp"

namespace dlgsa {

struct ImageRGB8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major

  ImageRGB8() = default;
  ImageRGB8(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(3) * w * h, 0) {}
  bool operator==(const ImageRGB8&) const = default;
};

/// Single-channel float plane, nominal range [0, 255].
struct PlaneF32 {
  int width = 0;
  int height = 0;
  std::vector<float> samples;

  PlaneF32() = default;
  PlaneF32(int w, int h) : width(w), height(h), samples(static_cast<std::size_t>(w) * h, 0.0f) {}
  float at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary PPM ("P6", maxval 255). Comments are allowed wherever the format
/// allows whitespace in the header.
ImageRGB8 read_ppm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> write_ppm(const ImageRGB8& img);
ImageRGB8 load_ppm(const std::string& path);
void save_ppm(const std::string& path, const ImageRGB8& img);

/// BT.601 luma, limited range: 16 + (65.481 R + 128.553 G + 24.966 B) / 255.
PlaneF32 rgb_to_y(const ImageRGB8& img);

/// Same conversion for a float RGB tensor in [0, 1] (batch item `index`).
PlaneF32 tensor_to_y(const TensorF& rgb, std::int64_t index = 0);

/// Cubic convolution, a = -0.5, clamped edges, half-pixel centers.
/// No antialiasing when shrinking.
PlaneF32 bicubic_resize(const PlaneF32& in, int out_w, int out_h);
ImageRGB8 bicubic_resize(const ImageRGB8& in, int out_w, int out_h);
/// Every plane of an [n, c, h, w] tensor. Not differentiable.
TensorF bicubic_resize(const TensorF& in, int out_w, int out_h);
TensorD bicubic_resize(const TensorD& in, int out_w, int out_h);

/// Kernel weight at distance x.
double cubic_weight(double x);

/// 10 log10(255^2 / MSE) after removing `border_crop` pixels on each side.
/// Identical planes give kPsnrCap.
inline constexpr double kPsnrCap = 100.0;
double psnr(const PlaneF32& ref, const PlaneF32& test, int border_crop);

/// Gaussian-window SSIM (11x11, sigma 1.5), averaged over valid windows.
double ssim(const PlaneF32& ref, const PlaneF32& test);

/// Crops `border` pixels from each side.
PlaneF32 crop(const PlaneF32& p, int border);

enum class SynthFamily { kStripes, kChecker, kBlobs, kMixed };

SynthFamily parse_synth_family(std::string_view name);
std::string_view synth_family_name(SynthFamily f);

/// Deterministic procedural image. Each family shares one pattern across
/// the three channels with a random base level and contrast per channel.
ImageRGB8 synth_image(std::uint64_t seed, int w, int h, SynthFamily family);

/// [1, 3, h, w] float tensor scaled to [0, 1].
TensorF image_to_tensor(const ImageRGB8& img);
/// Batch item `index` of an [n, 3, h, w] tensor, clamped to [0, 1] and
/// rounded to 8 bits.
ImageRGB8 tensor_to_image(const TensorF& t, std::int64_t index = 0);

}  // namespace dlgsa
