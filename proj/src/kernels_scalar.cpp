// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. These define the numeric contract: SIMD variants must
// reproduce them bit-exactly (build uses -ffp-contract=off so mul and add
// round separately here too).

#include "hvp/kernels.hpp"

namespace hvp::kernels {

namespace {

void gemm_accum_scalar(float* C, const float* A, const float* B, size_t M,
                       size_t K, size_t N) {
  for (size_t i = 0; i < M; ++i) {
    float* c = C + i * N;
    const float* a = A + i * K;
    for (size_t k = 0; k < K; ++k) {
      const float ak = a[k];
      const float* b = B + k * N;
      for (size_t j = 0; j < N; ++j) c[j] += ak * b[j];
    }
  }
}

void relu_scalar(float* out, const float* x, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_accum_scalar(float* dx, const float* x, const float* dy,
                           size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (x[i] > 0.0f) dx[i] += dy[i];
}

void add_accum_scalar(float* dst, const float* src, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void saxpy_accum_scalar(float* dst, float a, const float* src, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] += a * src[i];
}

void scale_scalar(float* dst, const float* x, float a, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = a * x[i];
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{
      "scalar",          gemm_accum_scalar, relu_scalar,
      relu_bwd_accum_scalar, add_accum_scalar,  saxpy_accum_scalar,
      scale_scalar,
  };
  return ops;
}

}  // namespace hvp::kernels
