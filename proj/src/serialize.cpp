// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlgsa/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dlgsa {

namespace {
constexpr char kMagic[4] = {'D', 'L', 'G', 'T'};
constexpr std::uint32_t kTagF32 = 1;
constexpr std::uint32_t kTagF64 = 2;
}  // namespace

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::bytes(const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  buf_.insert(buf_.end(), b, b + n);
}

void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s.data(), s.size());
}

void ByteReader::need(std::size_t n, const char* what) {
  if (size_ - pos_ < n) throw ParseError(std::string("truncated input reading ") + what, pos_);
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::bytes(void* out, std::size_t n) {
  need(n, "bytes");
  std::memcpy(out, data_ + pos_, n);
  pos_ += n;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

template <typename T>
void write_tensor(ByteWriter& out, const Tensor<T>& t) {
  out.bytes(kMagic, 4);
  out.u32(kTensorFormatVersion);
  out.u32(4);
  const Shape& s = t.shape();
  for (std::int64_t d : {s.n, s.c, s.h, s.w}) out.u32(static_cast<std::uint32_t>(d));
  if constexpr (std::is_same_v<T, float>) {
    out.u32(kTagF32);
    for (float v : t.data()) out.f32(v);
  } else {
    out.u32(kTagF64);
    for (double v : t.data()) out.f64(v);
  }
}

template <typename T>
Tensor<T> read_tensor(ByteReader& in) {
  const std::size_t start = in.offset();
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError("bad tensor magic", start);
  const std::size_t vpos = in.offset();
  const std::uint32_t version = in.u32();
  if (version != kTensorFormatVersion) {
    throw ParseError("unsupported tensor format version " + std::to_string(version), vpos);
  }
  const std::size_t rpos = in.offset();
  const std::uint32_t rank = in.u32();
  if (rank > 4) throw ParseError("tensor rank " + std::to_string(rank) + " exceeds 4", rpos);
  std::int64_t dims[4] = {1, 1, 1, 1};
  for (std::uint32_t i = 0; i < rank; ++i) dims[4 - rank + i] = in.u32();
  const Shape shape{dims[0], dims[1], dims[2], dims[3]};
  const std::size_t tpos = in.offset();
  const std::uint32_t tag = in.u32();
  if (tag != kTagF32 && tag != kTagF64) throw ParseError("unknown element type " + std::to_string(tag), tpos);
  std::vector<T> values(static_cast<std::size_t>(shape.numel()));
  for (auto& v : values) v = tag == kTagF32 ? static_cast<T>(in.f32()) : static_cast<T>(in.f64());
  return Tensor<T>(shape, std::move(values));
}

template <typename T>
std::vector<std::uint8_t> encode_tensor(const Tensor<T>& t) {
  ByteWriter w;
  write_tensor(w, t);
  return w.take();
}

template <typename T>
Tensor<T> decode_tensor(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  Tensor<T> t = read_tensor<T>(r);
  if (!r.at_end()) throw ParseError("trailing bytes after tensor", r.offset());
  return t;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

template void write_tensor(ByteWriter&, const Tensor<float>&);
template void write_tensor(ByteWriter&, const Tensor<double>&);
template Tensor<float> read_tensor(ByteReader&);
template Tensor<double> read_tensor(ByteReader&);
template std::vector<std::uint8_t> encode_tensor(const Tensor<float>&);
template std::vector<std::uint8_t> encode_tensor(const Tensor<double>&);
template Tensor<float> decode_tensor(const std::vector<std::uint8_t>&);
template Tensor<double> decode_tensor(const std::vector<std::uint8_t>&);

}  // namespace dlgsa
