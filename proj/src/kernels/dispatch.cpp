// Copyright 2026 The dlgsanet Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "dlgsa/kernels.hpp"

namespace dlgsa::kernels {

#if defined(DLGSA_BUILD_AVX2)
namespace avx2_impl {
const KernelSet<float>& f32();
const KernelSet<double>& f64();
}  // namespace avx2_impl
#endif

namespace {

bool cpu_has_avx2() {
#if defined(DLGSA_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

enum class Variant { kScalar, kAvx2 };

Variant initial_variant() {
  const bool has_avx2 = cpu_has_avx2();
  if (const char* env = std::getenv("DLGSA_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Variant::kScalar;
    if (want == "avx2" && has_avx2) return Variant::kAvx2;
  }
  return has_avx2 ? Variant::kAvx2 : Variant::kScalar;
}

std::atomic<Variant>& current() {
  static std::atomic<Variant> v{initial_variant()};
  return v;
}

}  // namespace

const KernelSet<float>* avx2_f32() {
#if defined(DLGSA_BUILD_AVX2)
  if (cpu_has_avx2()) return &avx2_impl::f32();
#endif
  return nullptr;
}

const KernelSet<double>* avx2_f64() {
#if defined(DLGSA_BUILD_AVX2)
  if (cpu_has_avx2()) return &avx2_impl::f64();
#endif
  return nullptr;
}

template <>
const KernelSet<float>& active<float>() {
  if (current().load(std::memory_order_relaxed) == Variant::kAvx2) return *avx2_f32();
  return scalar_f32();
}

template <>
const KernelSet<double>& active<double>() {
  if (current().load(std::memory_order_relaxed) == Variant::kAvx2) return *avx2_f64();
  return scalar_f64();
}

std::string_view active_name() {
  return current().load() == Variant::kAvx2 ? "avx2" : "scalar";
}

bool select(std::string_view name) {
  if (name == "scalar") {
    current().store(Variant::kScalar);
    return true;
  }
  if (name == "avx2" && avx2_f32() != nullptr) {
    current().store(Variant::kAvx2);
    return true;
  }
  return false;
}

std::vector<std::string_view> available() {
  std::vector<std::string_view> out{"scalar"};
  if (avx2_f32() != nullptr) out.push_back("avx2");
  return out;
}

}  // namespace dlgsa::kernels
