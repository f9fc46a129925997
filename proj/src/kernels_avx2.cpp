// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

// AVX2 kernels. Vector lanes map to independent output elements; the
// per-element reduction order matches the scalar reference. Compiled with
// -mavx2 and without -mfma: mul and add must round separately to stay
// bit-identical with the reference.

#include "hvp/kernels.hpp"

#if defined(HVP_BUILD_AVX2)

#include <immintrin.h>

namespace hvp::kernels {

namespace {

void gemm_accum_avx2(float* C, const float* A, const float* B, size_t M,
                     size_t K, size_t N) {
  const size_t n8 = N & ~size_t(7);
  for (size_t i = 0; i < M; ++i) {
    float* c = C + i * N;
    const float* a = A + i * K;
    for (size_t k = 0; k < K; ++k) {
      const __m256 ak = _mm256_set1_ps(a[k]);
      const float* b = B + k * N;
      size_t j = 0;
      for (; j < n8; j += 8) {
        __m256 cv = _mm256_loadu_ps(c + j);
        __m256 bv = _mm256_loadu_ps(b + j);
        cv = _mm256_add_ps(cv, _mm256_mul_ps(ak, bv));
        _mm256_storeu_ps(c + j, cv);
      }
      const float aks = a[k];
      for (; j < N; ++j) c[j] += aks * b[j];
    }
  }
}

void relu_avx2(float* out, const float* x, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(x + i);
    __m256 mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
    _mm256_storeu_ps(out + i, _mm256_and_ps(v, mask));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_accum_avx2(float* dx, const float* x, const float* dy,
                         size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xv = _mm256_loadu_ps(x + i);
    __m256 mask = _mm256_cmp_ps(xv, zero, _CMP_GT_OQ);
    __m256 dxv = _mm256_loadu_ps(dx + i);
    __m256 sum = _mm256_add_ps(dxv, _mm256_loadu_ps(dy + i));
    // blend keeps dx bits untouched where x <= 0 (no spurious +0 adds)
    _mm256_storeu_ps(dx + i, _mm256_blendv_ps(dxv, sum, mask));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) dx[i] += dy[i];
}

void add_accum_avx2(float* dst, const float* src, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_loadu_ps(dst + i);
    _mm256_storeu_ps(dst + i, _mm256_add_ps(d, _mm256_loadu_ps(src + i)));
  }
  for (; i < n; ++i) dst[i] += src[i];
}

void saxpy_accum_avx2(float* dst, float a, const float* src, size_t n) {
  const __m256 av = _mm256_set1_ps(a);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_loadu_ps(dst + i);
    __m256 s = _mm256_loadu_ps(src + i);
    _mm256_storeu_ps(dst + i, _mm256_add_ps(d, _mm256_mul_ps(av, s)));
  }
  for (; i < n; ++i) dst[i] += a * src[i];
}

void scale_avx2(float* dst, const float* x, float a, size_t n) {
  const __m256 av = _mm256_set1_ps(a);
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(dst + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) dst[i] = a * x[i];
}

}  // namespace

const Ops* avx2_ops_impl() {
  static const Ops ops{
      "avx2",          gemm_accum_avx2, relu_avx2, relu_bwd_accum_avx2,
      add_accum_avx2,  saxpy_accum_avx2, scale_avx2,
  };
  return &ops;
}

}  // namespace hvp::kernels

#endif  // HVP_BUILD_AVX2
