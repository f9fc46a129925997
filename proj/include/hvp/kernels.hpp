// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// Arithmetic inner-loop kernels with runtime CPU dispatch.
///
/// Every kernel has a scalar reference implementation and may have SIMD
/// variants (AVX2). Variants must be bit-identical to the reference: each
/// output element is accumulated in the same IEEE order, so vectorization is
/// only allowed across independent output elements, never inside a
/// reduction. Equivalence is enforced by tests/test_kernels.cpp.
///
/// Selection: HVP_SIMD=scalar|avx2|auto (default auto = best supported).

#pragma once

#include <cstddef>

namespace hvp::kernels {

struct Ops {
  const char* name;

  // C[M,N] += A[M,K] * B[K,N], all row-major dense. Per output element the
  // reduction over k runs in ascending order.
  void (*gemm_accum)(float* C, const float* A, const float* B, size_t M,
                     size_t K, size_t N);

  // out[i] = x[i] > 0 ? x[i] : 0
  void (*relu)(float* out, const float* x, size_t n);

  // dx[i] += dy[i] where x[i] > 0 (dx untouched elsewhere, bit-preserving)
  void (*relu_bwd_accum)(float* dx, const float* x, const float* dy, size_t n);

  // dst[i] += src[i]
  void (*add_accum)(float* dst, const float* src, size_t n);

  // dst[i] += a * src[i]
  void (*saxpy_accum)(float* dst, float a, const float* src, size_t n);

  // dst[i] = a * x[i]
  void (*scale)(float* dst, const float* x, float a, size_t n);
};

const Ops& scalar_ops();

// null when the CPU or build lacks AVX2
const Ops* avx2_ops();

// runtime-selected implementation (honors HVP_SIMD, cached after first call)
const Ops& active_ops();

bool cpu_has_avx2();

}  // namespace hvp::kernels
