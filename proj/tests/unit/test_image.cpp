// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "dlgsa/image.hpp"
#include "oracles.hpp"

using namespace dlgsa;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

PlaneF32 random_plane(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0.f, 255.f);
  PlaneF32 p(w, h);
  for (float& v : p.samples) v = d(rng);
  return p;
}

}  // namespace

TEST_CASE("ppm parsing") {
  auto red = bytes_of("P6\n1 1\n255\n");
  red.insert(red.end(), {255, 0, 0});
  auto img = read_ppm(red);
  CHECK(img.width == 1);
  CHECK(img.pixels == std::vector<std::uint8_t>{255, 0, 0});

  auto commented = bytes_of("P6 # comment\n2 2\n255\n");
  for (int i = 0; i < 12; ++i) commented.push_back(std::uint8_t(i * 20));
  img = read_ppm(commented);
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.pixels[11] == 220);

  std::mt19937_64 rng(3);
  ImageRGB8 r(7, 5);
  for (auto& b : r.pixels) b = std::uint8_t(rng());
  CHECK(read_ppm(write_ppm(r)) == r);

  CHECK_THROWS_AS(read_ppm(bytes_of("P5\n1 1\n255\nabc")), ParseError);
  CHECK_THROWS_AS(read_ppm(bytes_of("P6\n1 1\n65535\nabcdef")), ParseError);
  try {
    read_ppm(bytes_of("P6\n2 1\n255\nabc"));
    FAIL("truncated payload accepted");
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
  }
}

TEST_CASE("luma conversion") {
  ImageRGB8 img(3, 1);
  img.pixels = {255, 255, 255, 0, 0, 0, 128, 128, 128};
  auto y = rgb_to_y(img);
  CHECK(y.samples[0] == doctest::Approx(235.0).epsilon(0.0001));
  CHECK(y.samples[1] == doctest::Approx(16.0));
  CHECK(y.samples[2] == doctest::Approx(16 + 219.0 * 128 / 255).epsilon(1e-5));
  std::mt19937_64 rng(4);
  ImageRGB8 r(32, 32);
  for (auto& b : r.pixels) b = std::uint8_t(rng());
  for (float v : rgb_to_y(r).samples) {
    CHECK(v >= 16.0f - 0.01f);
    CHECK(v <= 235.0f + 0.01f);
  }
}

TEST_CASE("bicubic basics") {
  PlaneF32 c(5, 4);
  std::fill(c.samples.begin(), c.samples.end(), 77.0f);
  for (auto [w, h] : {std::pair{11, 3}, std::pair{2, 9}, std::pair{1, 1}}) {
    auto o = bicubic_resize(c, w, h);
    for (float v : o.samples) CHECK(v == doctest::Approx(77.0f).epsilon(1e-6));
  }
  auto r = random_plane(9, 6, 5);
  auto same = bicubic_resize(r, 9, 6);
  for (std::size_t i = 0; i < r.samples.size(); ++i) CHECK(std::fabs(same.samples[i] - r.samples[i]) < 1e-5);
  CHECK_THROWS_AS(bicubic_resize(r, 0, 3), ConfigError);

  PlaneF32 ramp(4, 4);
  for (int i = 0; i < 16; ++i) ramp.samples[i] = float(i);
  auto down = bicubic_resize(ramp, 2, 2);
  auto want = oracle::bicubic(oracle::Vec(ramp.samples.begin(), ramp.samples.end()), 4, 4, 2, 2);
  for (int i = 0; i < 4; ++i) CHECK(std::fabs(down.samples[i] - want[i]) < 1e-5);
}

TEST_CASE("bicubic two-step and one-step downscaling agree in quality") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto hr = rgb_to_y(synth_image(seed, 128, 128, SynthFamily::kBlobs));
    auto two = bicubic_resize(bicubic_resize(hr, 64, 64), 32, 32);
    auto one = bicubic_resize(hr, 32, 32);
    const double p2 = psnr(hr, bicubic_resize(two, 128, 128), 4), p1 = psnr(hr, bicubic_resize(one, 128, 128), 4);
    MESSAGE("upscaled back: two-step " << p2 << " dB, one-step " << p1 << " dB");
    CHECK(std::fabs(p2 - p1) < 0.5);
  }
}

TEST_CASE("psnr and ssim") {
  auto a = random_plane(16, 16, 6), b = random_plane(16, 16, 7);
  CHECK(psnr(a, a, 0) == kPsnrCap);
  auto shifted = a;
  for (float& v : shifted.samples) v += 1.0f;
  CHECK(psnr(a, shifted, 2) == doctest::Approx(20 * std::log10(255.0)).epsilon(1e-6));
  CHECK(psnr(a, b, 2) == psnr(b, a, 2));

  double mse = 0;
  for (int y = 3; y < 13; ++y)
    for (int x = 3; x < 13; ++x) mse += (double(a.at(x, y)) - b.at(x, y)) * (double(a.at(x, y)) - b.at(x, y));
  mse /= 100;
  CHECK(std::fabs(psnr(a, b, 3) - 10 * std::log10(255.0 * 255.0 / mse)) < 1e-6);
  CHECK_THROWS_AS(psnr(a, random_plane(15, 16, 1), 0), UsageError);

  CHECK(ssim(a, a) == doctest::Approx(1.0));
  CHECK(std::fabs(ssim(a, b) - ssim(b, a)) < 1e-9);
  PlaneF32 checker(32, 32), inverse(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      checker.samples[std::size_t(y) * 32 + x] = ((x / 2 + y / 2) % 2) ? 230.0f : 20.0f;
      inverse.samples[std::size_t(y) * 32 + x] = 255.0f - checker.samples[std::size_t(y) * 32 + x];
    }
  CHECK(ssim(checker, inverse) < 0.5);
  PlaneF32 c1(16, 16), c2(16, 16);
  std::fill(c1.samples.begin(), c1.samples.end(), 100.0f);
  std::fill(c2.samples.begin(), c2.samples.end(), 110.0f);
  const double k1 = (0.01 * 255) * (0.01 * 255);
  CHECK(ssim(c1, c2) == doctest::Approx((2 * 100.0 * 110 + k1) / (100.0 * 100 + 110.0 * 110 + k1)).epsilon(1e-6));
  CHECK_THROWS_AS(ssim(random_plane(10, 10, 1), random_plane(10, 10, 2)), UsageError);
}

TEST_CASE("synthetic images") {
  for (auto f : {SynthFamily::kStripes, SynthFamily::kChecker, SynthFamily::kBlobs, SynthFamily::kMixed}) {
    CHECK(synth_image(9, 40, 30, f) == synth_image(9, 40, 30, f));
    CHECK_FALSE(synth_image(9, 40, 30, f) == synth_image(10, 40, 30, f));
    CHECK(parse_synth_family(synth_family_name(f)) == f);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto y = rgb_to_y(synth_image(seed, 64, 64, SynthFamily::kStripes));
    double gx = 0, gy = 0;
    for (int r = 0; r < 63; ++r)
      for (int c = 0; c < 63; ++c) {
        gx += std::pow(y.at(c + 1, r) - y.at(c, r), 2);
        gy += std::pow(y.at(c, r + 1) - y.at(c, r), 2);
      }
    CHECK(std::max(gx, gy) > 2 * std::min(gx, gy));
  }
}

TEST_CASE("tensor conversion round-trips 8-bit images") {
  auto img = synth_image(2, 12, 9, SynthFamily::kMixed);
  auto t = image_to_tensor(img);
  CHECK(t.shape() == Shape{1, 3, 9, 12});
  CHECK(tensor_to_image(t) == img);
  auto y = tensor_to_y(t);
  auto y8 = rgb_to_y(img);
  for (std::size_t i = 0; i < y.samples.size(); ++i) CHECK(std::fabs(y.samples[i] - y8.samples[i]) < 1e-3);
}
