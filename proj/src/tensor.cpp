// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "hvp/kernels.hpp"
#include "hvp/parallel.hpp"

namespace hvp {

namespace {
const kernels::Ops& K() { return kernels::active_ops(); }

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    HVP_CHECK(d > 0, "tensor: extents must be positive");
    n *= d;
  }
  return n;
}
}  // namespace

struct Tensor::Impl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until needed
  bool requires_grad = false;
};

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data.assign(static_cast<size_t>(shape_numel(t.impl_->shape)), 0.0f);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data,
                         bool requires_grad) {
  int64_t n = shape_numel(shape);
  HVP_CHECK(static_cast<size_t>(n) == data.size(),
            "tensor: data length must equal product of shape extents");
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar_value(float v) { return from_data({1}, {v}); }

const Shape& Tensor::shape() const { return impl_->shape; }
int64_t Tensor::numel() const { return static_cast<int64_t>(impl_->data.size()); }
float* Tensor::data() { return impl_->data.data(); }
const float* Tensor::data() const { return impl_->data.data(); }
std::vector<float>& Tensor::vec() { return impl_->data; }
const std::vector<float>& Tensor::vec() const { return impl_->data; }

float Tensor::item() const {
  HVP_CHECK(numel() == 1, "tensor: item() requires a scalar");
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
void Tensor::set_requires_grad(bool v) { impl_->requires_grad = v; }
bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::vector<float>& Tensor::grad_vec() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
  return impl_->grad;
}

const std::vector<float>& Tensor::grad_vec() const { return impl_->grad; }

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

void Tensor::ensure_grad() { grad_vec(); }

void Tape::record(std::function<void()> backward_fn) {
  if (recording_) nodes_.push_back(std::move(backward_fn));
}

void Tape::backward(const Tensor& loss) {
  HVP_CHECK(loss.defined() && loss.numel() == 1,
            "backward: loss must be a scalar tensor");
  HVP_CHECK(!nodes_.empty(), "backward: tape is empty");
  const_cast<Tensor&>(loss).grad_vec()[0] += 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  nodes_.clear();
}

namespace ops {

namespace {

bool want_grad(Tape& tape, std::initializer_list<const Tensor*> ins) {
  if (!tape.recording()) return false;
  for (const Tensor* t : ins)
    if (t->requires_grad()) return true;
  return false;
}

// parallel over row blocks of C (disjoint outputs, k order unchanged)
void gemm_rows_parallel(float* C, const float* A, const float* B, size_t M,
                        size_t Kdim, size_t N) {
  parallel_for(M, [&](size_t r0, size_t r1) {
    K().gemm_accum(C + r0 * N, A + r0 * Kdim, B, r1 - r0, Kdim, N);
  });
}

std::vector<float> transposed(const float* a, size_t rows, size_t cols) {
  std::vector<float> t(rows * cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  return t;
}

}  // namespace

Tensor affine(Tape& tape, const Tensor& x, const Tensor& W, const Tensor& b) {
  HVP_CHECK(x.ndim() == 2 && W.ndim() == 2 && b.ndim() == 1,
            "affine: x [M,Din], W [Din,Dout], b [Dout]");
  const size_t M = x.dim(0), Din = x.dim(1), Dout = W.dim(1);
  HVP_CHECK(W.dim(0) == static_cast<int64_t>(Din) &&
                b.dim(0) == static_cast<int64_t>(Dout),
            "affine: shape mismatch");

  Tensor out = Tensor::zeros({static_cast<int64_t>(M), static_cast<int64_t>(Dout)});
  for (size_t m = 0; m < M; ++m)
    std::memcpy(out.data() + m * Dout, b.data(), Dout * sizeof(float));
  gemm_rows_parallel(out.data(), x.data(), W.data(), M, Din, Dout);

  if (want_grad(tape, {&x, &W, &b})) {
    out.set_requires_grad(true);
    Tensor xs = x, Ws = W, bs = b, os = out;
    tape.record([xs, Ws, bs, os, M, Din, Dout]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      if (xs.requires_grad()) {
        auto WT = transposed(Ws.data(), Din, Dout);  // [Dout,Din]
        gemm_rows_parallel(xs.grad_vec().data(), dout, WT.data(), M, Dout, Din);
      }
      if (Ws.requires_grad()) {
        auto xT = transposed(xs.data(), M, Din);  // [Din,M]
        gemm_rows_parallel(Ws.grad_vec().data(), xT.data(), dout, Din, M, Dout);
      }
      if (bs.requires_grad()) {
        float* db = bs.grad_vec().data();
        for (size_t m = 0; m < M; ++m) K().add_accum(db, dout + m * Dout, Dout);
      }
    });
  }
  return out;
}

namespace {

struct ConvDims {
  size_t M, C, H, W, F, OH, OW, E, OHW;
  int stride, pad;
};

ConvDims conv_dims(const Tensor& x, const Tensor& k, int stride, int pad) {
  HVP_CHECK(x.ndim() == 4 && k.ndim() == 4, "conv2d: x [M,C,H,W], k [F,C,3,3]");
  HVP_CHECK(k.dim(2) == 3 && k.dim(3) == 3, "conv2d: kernels must be 3x3");
  HVP_CHECK(k.dim(1) == x.dim(1), "conv2d: channel mismatch");
  HVP_CHECK(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");
  HVP_CHECK(pad == 0 || pad == 1, "conv2d: pad must be 0 or 1");
  ConvDims d;
  d.M = x.dim(0);
  d.C = x.dim(1);
  d.H = x.dim(2);
  d.W = x.dim(3);
  d.F = k.dim(0);
  d.stride = stride;
  d.pad = pad;
  // floor semantics, as in standard conv layers; windows never extend past
  // the padded input
  const int64_t oh_num = x.dim(2) + 2 * pad - 3;
  const int64_t ow_num = x.dim(3) + 2 * pad - 3;
  HVP_CHECK(oh_num >= 0 && ow_num >= 0,
            "conv2d: non-integral output extent (input too small for a 3x3 "
            "window)");
  d.OH = static_cast<size_t>(oh_num / stride + 1);
  d.OW = static_cast<size_t>(ow_num / stride + 1);
  d.E = d.C * 9;
  d.OHW = d.OH * d.OW;
  return d;
}

// patch matrix, layout [E, OH*OW]: one row per (c,ky,kx), zero where padded
void im2col_cols(const ConvDims& d, const float* xm, float* P) {
  for (size_t c = 0; c < d.C; ++c) {
    const float* xc = xm + c * d.H * d.W;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        float* row = P + (c * 9 + ky * 3 + kx) * d.OHW;
        for (size_t oy = 0; oy < d.OH; ++oy) {
          const int64_t iy = static_cast<int64_t>(oy) * d.stride + ky - d.pad;
          float* dst = row + oy * d.OW;
          if (iy < 0 || iy >= static_cast<int64_t>(d.H)) {
            std::memset(dst, 0, d.OW * sizeof(float));
            continue;
          }
          const float* src = xc + static_cast<size_t>(iy) * d.W;
          for (size_t ox = 0; ox < d.OW; ++ox) {
            const int64_t ix = static_cast<int64_t>(ox) * d.stride + kx - d.pad;
            dst[ox] = (ix < 0 || ix >= static_cast<int64_t>(d.W))
                          ? 0.0f
                          : src[ix];
          }
        }
      }
    }
  }
}

// patch matrix, layout [OH*OW, E]: one row per output position
void im2col_rows(const ConvDims& d, const float* xm, float* P) {
  for (size_t oy = 0; oy < d.OH; ++oy) {
    for (size_t ox = 0; ox < d.OW; ++ox) {
      float* row = P + (oy * d.OW + ox) * d.E;
      for (size_t c = 0; c < d.C; ++c) {
        const float* xc = xm + c * d.H * d.W;
        for (int ky = 0; ky < 3; ++ky) {
          const int64_t iy = static_cast<int64_t>(oy) * d.stride + ky - d.pad;
          for (int kx = 0; kx < 3; ++kx) {
            const int64_t ix = static_cast<int64_t>(ox) * d.stride + kx - d.pad;
            row[c * 9 + ky * 3 + kx] =
                (iy < 0 || iy >= static_cast<int64_t>(d.H) || ix < 0 ||
                 ix >= static_cast<int64_t>(d.W))
                    ? 0.0f
                    : xc[static_cast<size_t>(iy) * d.W + ix];
          }
        }
      }
    }
  }
}

thread_local std::vector<float> tl_scratch;

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& k, int stride,
              int pad) {
  const ConvDims d = conv_dims(x, k, stride, pad);

  Tensor out = Tensor::zeros({static_cast<int64_t>(d.M),
                              static_cast<int64_t>(d.F),
                              static_cast<int64_t>(d.OH),
                              static_cast<int64_t>(d.OW)});
  const float* xd = x.data();
  const float* kd = k.data();
  float* od = out.data();
  parallel_for(d.M, [&](size_t m0, size_t m1) {
    std::vector<float>& P = tl_scratch;
    if (P.size() < d.E * d.OHW) P.resize(d.E * d.OHW);
    for (size_t m = m0; m < m1; ++m) {
      im2col_cols(d, xd + m * d.C * d.H * d.W, P.data());
      K().gemm_accum(od + m * d.F * d.OHW, kd, P.data(), d.F, d.E, d.OHW);
    }
  });

  if (want_grad(tape, {&x, &k})) {
    out.set_requires_grad(true);
    Tensor xs = x, ks = k, os = out;
    tape.record([xs, ks, os, d]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      if (xs.requires_grad()) {
        auto KT = transposed(ks.data(), d.F, d.E);  // [E,F]
        float* dx = xs.grad_vec().data();
        const size_t img = d.C * d.H * d.W;
        parallel_for(d.M, [&](size_t m0, size_t m1) {
          std::vector<float> dP(d.E * d.OHW);
          for (size_t m = m0; m < m1; ++m) {
            std::fill(dP.begin(), dP.end(), 0.0f);
            K().gemm_accum(dP.data(), KT.data(), dout + m * d.F * d.OHW, d.E,
                           d.F, d.OHW);
            // col2im as a gather: each dx element sums its <=9 patch slots
            float* dxm = dx + m * img;
            for (size_t c = 0; c < d.C; ++c) {
              for (size_t iy = 0; iy < d.H; ++iy) {
                for (size_t ix = 0; ix < d.W; ++ix) {
                  float acc = 0.0f;
                  for (int ky = 0; ky < 3; ++ky) {
                    const int64_t ty = static_cast<int64_t>(iy) + d.pad - ky;
                    if (ty < 0 || ty % d.stride != 0) continue;
                    const size_t oy = static_cast<size_t>(ty / d.stride);
                    if (oy >= d.OH) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                      const int64_t tx = static_cast<int64_t>(ix) + d.pad - kx;
                      if (tx < 0 || tx % d.stride != 0) continue;
                      const size_t ox = static_cast<size_t>(tx / d.stride);
                      if (ox >= d.OW) continue;
                      acc += dP[(c * 9 + ky * 3 + kx) * d.OHW + oy * d.OW + ox];
                    }
                  }
                  dxm[(c * d.H + iy) * d.W + ix] += acc;
                }
              }
            }
          }
        });
      }
      if (ks.requires_grad()) {
        // dK[f,e] += sum over (m, position) of dout[m,f,pos] * Prow[pos,e];
        // threads own disjoint f-rows, images stay in ascending order.
        float* dK = ks.grad_vec().data();
        const float* xd2 = xs.data();
        const size_t chunk = 8;
        std::vector<float> Prow(chunk * d.OHW * d.E);
        for (size_t m0 = 0; m0 < d.M; m0 += chunk) {
          const size_t mc = std::min(chunk, d.M - m0);
          parallel_for(mc, [&](size_t a, size_t b) {
            for (size_t ci = a; ci < b; ++ci)
              im2col_rows(d, xd2 + (m0 + ci) * d.C * d.H * d.W,
                          Prow.data() + ci * d.OHW * d.E);
          });
          parallel_for(d.F, [&](size_t f0, size_t f1) {
            for (size_t ci = 0; ci < mc; ++ci) {
              const float* dout_m = dout + (m0 + ci) * d.F * d.OHW;
              K().gemm_accum(dK + f0 * d.E, dout_m + f0 * d.OHW,
                             Prow.data() + ci * d.OHW * d.E, f1 - f0, d.OHW,
                             d.E);
            }
          });
        }
      }
    });
  }
  return out;
}

Tensor channel_bias(Tape& tape, const Tensor& x, const Tensor& b) {
  HVP_CHECK(x.ndim() == 4 && b.ndim() == 1 && b.dim(0) == x.dim(1),
            "channel_bias: x [M,C,H,W], b [C]");
  const size_t M = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  Tensor out = Tensor::zeros(x.shape());
  const float* xd = x.data();
  float* od = out.data();
  for (size_t m = 0; m < M; ++m)
    for (size_t c = 0; c < C; ++c) {
      const float bc = b.data()[c];
      const float* src = xd + (m * C + c) * HW;
      float* dst = od + (m * C + c) * HW;
      for (size_t i = 0; i < HW; ++i) dst[i] = src[i] + bc;
    }

  if (want_grad(tape, {&x, &b})) {
    out.set_requires_grad(true);
    Tensor xs = x, bs = b, os = out;
    tape.record([xs, bs, os, M, C, HW]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      if (xs.requires_grad())
        K().add_accum(xs.grad_vec().data(), dout, M * C * HW);
      if (bs.requires_grad()) {
        float* db = bs.grad_vec().data();
        for (size_t m = 0; m < M; ++m)
          for (size_t c = 0; c < C; ++c) {
            const float* src = dout + (m * C + c) * HW;
            float acc = 0.0f;
            for (size_t i = 0; i < HW; ++i) acc += src[i];
            db[c] += acc;
          }
      }
    });
  }
  return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  K().relu(out.data(), x.data(), x.numel());
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    Tensor xs = x, os = out;
    tape.record([xs, os]() mutable {
      if (!os.has_grad()) return;
      K().relu_bwd_accum(xs.grad_vec().data(), xs.data(),
                         os.grad_vec().data(), xs.numel());
    });
  }
  return out;
}

Tensor global_average_pool(Tape& tape, const Tensor& x) {
  HVP_CHECK(x.ndim() == 4, "global_average_pool: x [M,C,H,W]");
  const size_t M = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  const float inv = 1.0f / static_cast<float>(HW);
  Tensor out = Tensor::zeros({x.dim(0), x.dim(1)});
  const float* xd = x.data();
  float* od = out.data();
  for (size_t p = 0; p < M * C; ++p) {
    const float* src = xd + p * HW;
    float acc = 0.0f;
    for (size_t i = 0; i < HW; ++i) acc += src[i];
    od[p] = acc * inv;
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    Tensor xs = x, os = out;
    tape.record([xs, os, M, C, HW, inv]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      float* dx = xs.grad_vec().data();
      for (size_t p = 0; p < M * C; ++p) {
        const float a = dout[p] * inv;
        float* dst = dx + p * HW;
        for (size_t i = 0; i < HW; ++i) dst[i] += a;
      }
    });
  }
  return out;
}

Tensor l2_normalize(Tape& tape, const Tensor& x, float eps) {
  HVP_CHECK(x.ndim() == 2, "l2_normalize: x [M,D]");
  HVP_CHECK(eps > 0.0f, "l2_normalize: eps must be positive");
  const size_t M = x.dim(0), D = x.dim(1);
  Tensor out = Tensor::zeros(x.shape());
  std::vector<float> inv_scale(M);
  std::vector<char> clamped(M);
  for (size_t m = 0; m < M; ++m) {
    const float* row = x.data() + m * D;
    float ss = 0.0f;
    for (size_t j = 0; j < D; ++j) ss += row[j] * row[j];
    const float norm = std::sqrt(ss);
    const bool cl = !(norm > eps);
    const float inv = 1.0f / (cl ? eps : norm);
    inv_scale[m] = inv;
    clamped[m] = cl;
    K().scale(out.data() + m * D, row, inv, D);
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    Tensor xs = x, os = out;
    auto invs = std::move(inv_scale);
    auto cls = std::move(clamped);
    tape.record([xs, os, invs, cls, M, D]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      float* dx = xs.grad_vec().data();
      const float* o = os.data();
      for (size_t m = 0; m < M; ++m) {
        const float* go = dout + m * D;
        const float* om = o + m * D;
        float* dxm = dx + m * D;
        if (cls[m]) {
          // below eps the scale is constant
          K().saxpy_accum(dxm, invs[m], go, D);
        } else {
          float dot = 0.0f;
          for (size_t j = 0; j < D; ++j) dot += go[j] * om[j];
          for (size_t j = 0; j < D; ++j)
            dxm[j] += (go[j] - om[j] * dot) * invs[m];
        }
      }
    });
  }
  return out;
}

Tensor row_dot(Tape& tape, const Tensor& a, const Tensor& b) {
  HVP_CHECK(a.ndim() == 2 && a.shape() == b.shape(), "row_dot: shapes differ");
  const size_t M = a.dim(0), D = a.dim(1);
  Tensor out = Tensor::zeros({a.dim(0)});
  for (size_t m = 0; m < M; ++m) {
    const float* ar = a.data() + m * D;
    const float* br = b.data() + m * D;
    float acc = 0.0f;
    for (size_t j = 0; j < D; ++j) acc += ar[j] * br[j];
    out.data()[m] = acc;
  }
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor as = a, bs = b, os = out;
    tape.record([as, bs, os, M, D]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      if (as.requires_grad()) {
        float* da = as.grad_vec().data();
        for (size_t m = 0; m < M; ++m)
          K().saxpy_accum(da + m * D, dout[m], bs.data() + m * D, D);
      }
      if (bs.requires_grad()) {
        float* db = bs.grad_vec().data();
        for (size_t m = 0; m < M; ++m)
          K().saxpy_accum(db + m * D, dout[m], as.data() + m * D, D);
      }
    });
  }
  return out;
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
  HVP_CHECK(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(1),
            "matmul_nt: a [M,D], b [N,D]");
  const size_t M = a.dim(0), D = a.dim(1), N = b.dim(0);
  Tensor out = Tensor::zeros({a.dim(0), b.dim(0)});
  auto BT = transposed(b.data(), N, D);  // [D,N]
  gemm_rows_parallel(out.data(), a.data(), BT.data(), M, D, N);
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor as = a, bs = b, os = out;
    tape.record([as, bs, os, M, D, N]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      if (as.requires_grad())
        gemm_rows_parallel(as.grad_vec().data(), dout, bs.data(), M, N, D);
      if (bs.requires_grad()) {
        auto doutT = transposed(dout, M, N);  // [N,M]
        gemm_rows_parallel(bs.grad_vec().data(), doutT.data(), as.data(), N, M,
                           D);
      }
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  HVP_CHECK(a.shape() == b.shape(), "add: shapes differ");
  Tensor out = Tensor::from_data(a.shape(), a.vec());
  K().add_accum(out.data(), b.data(), out.numel());
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor as = a, bs = b, os = out;
    tape.record([as, bs, os]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      if (as.requires_grad())
        K().add_accum(as.grad_vec().data(), dout, as.numel());
      if (bs.requires_grad())
        K().add_accum(bs.grad_vec().data(), dout, bs.numel());
    });
  }
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  HVP_CHECK(a.shape() == b.shape(), "sub: shapes differ");
  Tensor out = Tensor::from_data(a.shape(), a.vec());
  K().saxpy_accum(out.data(), -1.0f, b.data(), out.numel());
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor as = a, bs = b, os = out;
    tape.record([as, bs, os]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      if (as.requires_grad())
        K().add_accum(as.grad_vec().data(), dout, as.numel());
      if (bs.requires_grad())
        K().saxpy_accum(bs.grad_vec().data(), -1.0f, dout, bs.numel());
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  HVP_CHECK(a.shape() == b.shape(), "mul: shapes differ");
  const size_t n = a.numel();
  Tensor out = Tensor::zeros(a.shape());
  for (size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor as = a, bs = b, os = out;
    tape.record([as, bs, os, n]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      if (as.requires_grad()) {
        float* da = as.grad_vec().data();
        for (size_t i = 0; i < n; ++i) da[i] += dout[i] * bs.data()[i];
      }
      if (bs.requires_grad()) {
        float* db = bs.grad_vec().data();
        for (size_t i = 0; i < n; ++i) db[i] += dout[i] * as.data()[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& x, float c) {
  Tensor out = Tensor::zeros(x.shape());
  K().scale(out.data(), x.data(), c, x.numel());
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    Tensor xs = x, os = out;
    tape.record([xs, os, c]() mutable {
      if (!os.has_grad()) return;
      K().saxpy_accum(xs.grad_vec().data(), c, os.grad_vec().data(),
                      xs.numel());
    });
  }
  return out;
}

Tensor mean_all(Tape& tape, const Tensor& x) {
  const size_t n = x.numel();
  const float inv = 1.0f / static_cast<float>(n);
  float acc = 0.0f;
  for (size_t i = 0; i < n; ++i) acc += x.data()[i];
  Tensor out = Tensor::scalar_value(acc * inv);
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    Tensor xs = x, os = out;
    tape.record([xs, os, inv]() mutable {
      if (!os.has_grad()) return;
      const float a = os.grad_vec()[0] * inv;
      float* dx = xs.grad_vec().data();
      for (int64_t i = 0; i < xs.numel(); ++i) dx[i] += a;
    });
  }
  return out;
}

Tensor stop_grad(const Tensor& x) {
  return Tensor::from_data(x.shape(), x.vec(), /*requires_grad=*/false);
}

Tensor diag_part(Tape& tape, const Tensor& x) {
  HVP_CHECK(x.ndim() == 2 && x.dim(0) == x.dim(1), "diag_part: square input");
  const size_t M = x.dim(0);
  Tensor out = Tensor::zeros({x.dim(0)});
  for (size_t i = 0; i < M; ++i) out.data()[i] = x.data()[i * M + i];
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    Tensor xs = x, os = out;
    tape.record([xs, os, M]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      float* dx = xs.grad_vec().data();
      for (size_t i = 0; i < M; ++i) dx[i * M + i] += dout[i];
    });
  }
  return out;
}

Tensor logsumexp_rows(Tape& tape, const Tensor& x, bool exclude_diag) {
  HVP_CHECK(x.ndim() == 2, "logsumexp_rows: x [M,N]");
  const size_t M = x.dim(0), N = x.dim(1);
  if (exclude_diag)
    HVP_CHECK(M == N && M >= 2,
              "logsumexp_rows: diagonal exclusion needs square input, M >= 2");
  Tensor out = Tensor::zeros({x.dim(0)});
  for (size_t i = 0; i < M; ++i) {
    const float* row = x.data() + i * N;
    float mx = -std::numeric_limits<float>::infinity();
    for (size_t j = 0; j < N; ++j) {
      if (exclude_diag && j == i) continue;
      if (row[j] > mx) mx = row[j];
    }
    float s = 0.0f;
    for (size_t j = 0; j < N; ++j) {
      if (exclude_diag && j == i) continue;
      s += std::exp(row[j] - mx);
    }
    out.data()[i] = mx + std::log(s);
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    Tensor xs = x, os = out;
    tape.record([xs, os, M, N, exclude_diag]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      float* dx = xs.grad_vec().data();
      for (size_t i = 0; i < M; ++i) {
        const float* row = xs.data() + i * N;
        const float lse = os.data()[i];
        for (size_t j = 0; j < N; ++j) {
          if (exclude_diag && j == i) continue;
          dx[i * N + j] += dout[i] * std::exp(row[j] - lse);
        }
      }
    });
  }
  return out;
}

Tensor logaddexp(Tape& tape, const Tensor& a, const Tensor& b) {
  HVP_CHECK(a.shape() == b.shape(), "logaddexp: shapes differ");
  const size_t n = a.numel();
  Tensor out = Tensor::zeros(a.shape());
  for (size_t i = 0; i < n; ++i) {
    const float av = a.data()[i], bv = b.data()[i];
    const float mx = av > bv ? av : bv;
    out.data()[i] = mx + std::log(std::exp(av - mx) + std::exp(bv - mx));
  }
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor as = a, bs = b, os = out;
    tape.record([as, bs, os, n]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      for (size_t i = 0; i < n; ++i) {
        const float o = os.data()[i];
        if (as.requires_grad())
          as.grad_vec()[i] += dout[i] * std::exp(as.data()[i] - o);
        if (bs.requires_grad())
          bs.grad_vec()[i] += dout[i] * std::exp(bs.data()[i] - o);
      }
    });
  }
  return out;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             const std::vector<int>& labels) {
  HVP_CHECK(logits.ndim() == 2, "softmax_cross_entropy: logits [M,C]");
  const size_t M = logits.dim(0), C = logits.dim(1);
  HVP_CHECK(labels.size() == M, "softmax_cross_entropy: label count mismatch");
  for (int y : labels)
    HVP_CHECK(y >= 0 && static_cast<size_t>(y) < C,
              "softmax_cross_entropy: label out of range");
  Tensor out = Tensor::zeros({logits.dim(0)});
  std::vector<float> lse(M);
  for (size_t i = 0; i < M; ++i) {
    const float* row = logits.data() + i * C;
    float mx = row[0];
    for (size_t j = 1; j < C; ++j)
      if (row[j] > mx) mx = row[j];
    float s = 0.0f;
    for (size_t j = 0; j < C; ++j) s += std::exp(row[j] - mx);
    lse[i] = mx + std::log(s);
    out.data()[i] = lse[i] - row[labels[i]];
  }
  if (want_grad(tape, {&logits})) {
    out.set_requires_grad(true);
    Tensor ls = logits, os = out;
    auto lses = std::move(lse);
    auto labs = labels;
    tape.record([ls, os, lses, labs, M, C]() mutable {
      if (!os.has_grad()) return;
      const float* dout = os.grad_vec().data();
      float* dl = ls.grad_vec().data();
      for (size_t i = 0; i < M; ++i) {
        const float* row = ls.data() + i * C;
        for (size_t j = 0; j < C; ++j) {
          float p = std::exp(row[j] - lses[i]);
          if (j == static_cast<size_t>(labs[i])) p -= 1.0f;
          dl[i * C + j] += dout[i] * p;
        }
      }
    });
  }
  return out;
}

}  // namespace ops

OptimizerState OptimizerState::for_params(const std::vector<Tensor>& params,
                                          float momentum, float weight_decay) {
  OptimizerState st;
  st.momentum = momentum;
  st.weight_decay = weight_decay;
  for (const Tensor& p : params) {
    Slot s;
    s.param = p;
    s.velocity.assign(p.numel(), 0.0f);
    st.slots.push_back(std::move(s));
    st.slots.back().param.ensure_grad();
  }
  return st;
}

void sgd_step(OptimizerState& state, float lr) {
  for (auto& slot : state.slots) {
    HVP_CHECK(slot.param.has_grad(), "sgd_step: parameter grad missing");
    float* p = slot.param.data();
    float* g = slot.param.grad_vec().data();
    float* v = slot.velocity.data();
    const size_t n = slot.param.numel();
    for (size_t i = 0; i < n; ++i) {
      const float gp = g[i] + state.weight_decay * p[i];
      v[i] = state.momentum * v[i] + gp;
      p[i] -= lr * v[i];
    }
    slot.param.zero_grad();
  }
}

float cosine_lr(int64_t step, int64_t total_steps, float base_lr,
                float min_lr) {
  HVP_CHECK(step >= 0 && total_steps > 0, "cosine_lr: bad step/total");
  if (step > total_steps) return min_lr;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return static_cast<float>(
      min_lr + 0.5 * (static_cast<double>(base_lr) - min_lr) *
                   (1.0 + std::cos(3.14159265358979323846 * t)));
}

}  // namespace hvp
