// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

// Binary tensor format "DLGT":
//   magic "DLGT" | version u32 | rank u32 | dims u32 x rank | dtype u32 | data
// Integers and elements are little-endian. dtype 1 = f32, 2 = f64.
// Rank is always 4 when written; readers accept rank 0..4 and pad leading
// dimensions with 1.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlgsa/tensor.hpp"

namespace dlgsa {

inline constexpr std::uint32_t kTensorFormatVersion = 1;

class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(const void* p, std::size_t n);
  void str(const std::string& s);  // u32 length + bytes

  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader. Every failure is a ParseError carrying the offset.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<std::uint8_t>& v) : ByteReader(v.data(), v.size()) {}

  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  void bytes(void* out, std::size_t n);
  std::string str();

  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == size_; }

 private:
  void need(std::size_t n, const char* what);
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

template <typename T>
void write_tensor(ByteWriter& out, const Tensor<T>& t);

/// Reads one tensor, converting the stored element type to T if it differs.
template <typename T>
Tensor<T> read_tensor(ByteReader& in);

template <typename T>
std::vector<std::uint8_t> encode_tensor(const Tensor<T>& t);

template <typename T>
Tensor<T> decode_tensor(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace dlgsa
