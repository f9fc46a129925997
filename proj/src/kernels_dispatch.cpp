// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <cstring>

#include "hvp/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <cpuid.h>
#endif

namespace hvp::kernels {

#if defined(HVP_BUILD_AVX2)
const Ops* avx2_ops_impl();
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  unsigned eax, ebx, ecx, edx;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  if (!(ebx & (1u << 5))) return false;  // AVX2
  // OS must save YMM state
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  if (!(ecx & (1u << 27))) return false;  // OSXSAVE
  unsigned lo, hi;
  __asm__ volatile("xgetbv" : "=a"(lo), "=d"(hi) : "c"(0));
  return (lo & 0x6) == 0x6;  // XMM and YMM state saved
#else
  return false;
#endif
}

const Ops* avx2_ops() {
#if defined(HVP_BUILD_AVX2)
  if (cpu_has_avx2()) return avx2_ops_impl();
#endif
  return nullptr;
}

const Ops& active_ops() {
  static const Ops* selected = [] {
    const char* env = std::getenv("HVP_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (env && std::strcmp(env, "avx2") == 0) {
      const Ops* v = avx2_ops();
      return v ? v : &scalar_ops();
    }
    const Ops* v = avx2_ops();
    return v ? v : &scalar_ops();
  }();
  return *selected;
}

}  // namespace hvp::kernels
