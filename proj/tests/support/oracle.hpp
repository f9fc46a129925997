// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

// Test-side oracles. The double-precision forward below is written
// independently of the library (plain loops, no kernel dispatch) and backs
// the central-finite-difference gradient checks.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hvp/rng.hpp"
#include "hvp/tensor.hpp"

namespace oracle {

using DVec = std::vector<double>;

inline DVec to_double(const hvp::Tensor& t) {
  DVec v(t.numel());
  for (int64_t i = 0; i < t.numel(); ++i) v[i] = t.data()[i];
  return v;
}

// ---- double-precision forward ----

inline DVec affine(const DVec& x, const DVec& w, const DVec& b, int m, int din,
                   int dout) {
  DVec out(static_cast<size_t>(m) * dout);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < dout; ++j) {
      double acc = b[j];
      for (int k = 0; k < din; ++k) acc += x[i * din + k] * w[k * dout + j];
      out[i * dout + j] = acc;
    }
  return out;
}

inline DVec conv2d(const DVec& x, const DVec& k, int m, int c, int h, int w,
                   int f, int stride, int pad, int* oh_out, int* ow_out) {
  const int oh = (h + 2 * pad - 3) / stride + 1;
  const int ow = (w + 2 * pad - 3) / stride + 1;
  *oh_out = oh;
  *ow_out = ow;
  DVec out(static_cast<size_t>(m) * f * oh * ow, 0.0);
  for (int mi = 0; mi < m; ++mi)
    for (int fi = 0; fi < f; ++fi)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int ci = 0; ci < c; ++ci)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy * stride + ky - pad;
                const int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += x[((mi * c + ci) * h + iy) * w + ix] *
                       k[((fi * c + ci) * 3 + ky) * 3 + kx];
              }
          out[((mi * f + fi) * oh + oy) * ow + ox] = acc;
        }
  return out;
}

inline DVec channel_bias(const DVec& x, const DVec& b, int m, int c, int hw) {
  DVec out(x.size());
  for (int mi = 0; mi < m; ++mi)
    for (int ci = 0; ci < c; ++ci)
      for (int i = 0; i < hw; ++i)
        out[(mi * c + ci) * hw + i] = x[(mi * c + ci) * hw + i] + b[ci];
  return out;
}

inline DVec relu(const DVec& x) {
  DVec out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0 ? x[i] : 0.0;
  return out;
}

inline DVec gap(const DVec& x, int m, int c, int hw) {
  DVec out(static_cast<size_t>(m) * c, 0.0);
  for (int p = 0; p < m * c; ++p) {
    double acc = 0.0;
    for (int i = 0; i < hw; ++i) acc += x[p * hw + i];
    out[p] = acc / hw;
  }
  return out;
}

inline DVec l2_normalize(const DVec& x, int m, int d, double eps) {
  DVec out(x.size());
  for (int i = 0; i < m; ++i) {
    double ss = 0.0;
    for (int j = 0; j < d; ++j) ss += x[i * d + j] * x[i * d + j];
    const double norm = std::sqrt(ss);
    const double s = norm > eps ? norm : eps;
    for (int j = 0; j < d; ++j) out[i * d + j] = x[i * d + j] / s;
  }
  return out;
}

inline DVec row_dot(const DVec& a, const DVec& b, int m, int d) {
  DVec out(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += a[i * d + j] * b[i * d + j];
    out[i] = acc;
  }
  return out;
}

inline DVec matmul_nt(const DVec& a, const DVec& b, int m, int d, int n) {
  DVec out(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += a[i * d + k] * b[j * d + k];
      out[i * n + j] = acc;
    }
  return out;
}

inline DVec logsumexp_rows(const DVec& x, int m, int n, bool excl_diag) {
  DVec out(m);
  for (int i = 0; i < m; ++i) {
    double mx = -1e300;
    for (int j = 0; j < n; ++j) {
      if (excl_diag && j == i) continue;
      mx = std::max(mx, x[i * n + j]);
    }
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      if (excl_diag && j == i) continue;
      s += std::exp(x[i * n + j] - mx);
    }
    out[i] = mx + std::log(s);
  }
  return out;
}

inline double mean(const DVec& x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

// ---- finite-difference gradient checking ----
//
// `forward`: double-precision loss as a function of flat double inputs.
// `build_loss`: builds the float loss on a tape from the same tensors.
// Checks every parameter coordinate (or a sample of them) with central
// differences at h = 1e-3 and requires vector relative error <= 1e-4.

struct FdCheck {
  double rel_err = 0.0;
  size_t checked = 0;
};

inline FdCheck check_gradients(
    std::vector<hvp::Tensor> inputs,
    const std::function<double(const std::vector<DVec>&)>& forward_double,
    const std::function<hvp::Tensor(hvp::Tape&)>& build_loss,
    hvp::Rng& coord_rng, size_t max_coords_per_input = 12) {
  // analytic gradients (float path)
  for (auto& t : inputs) t.zero_grad();
  hvp::Tape tape;
  hvp::Tensor loss = build_loss(tape);
  tape.backward(loss);

  std::vector<DVec> base;
  base.reserve(inputs.size());
  for (auto& t : inputs) base.push_back(to_double(t));

  const double h = 1e-3;
  double num = 0.0, den_a = 0.0, den_f = 0.0;
  size_t checked = 0;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    if (!inputs[ti].requires_grad()) continue;
    const int64_t n = inputs[ti].numel();
    std::vector<int64_t> coords;
    if (static_cast<size_t>(n) <= max_coords_per_input) {
      for (int64_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (size_t i = 0; i < max_coords_per_input; ++i)
        coords.push_back(static_cast<int64_t>(coord_rng.next_below(n)));
    }
    for (int64_t ci : coords) {
      std::vector<DVec> plus = base, minus = base;
      plus[ti][ci] += h;
      minus[ti][ci] -= h;
      const double fd = (forward_double(plus) - forward_double(minus)) / (2 * h);
      const double an = inputs[ti].grad_vec()[ci];
      num += (an - fd) * (an - fd);
      den_a += an * an;
      den_f += fd * fd;
      ++checked;
    }
  }
  FdCheck r;
  r.checked = checked;
  const double den = std::sqrt(std::max(den_a, den_f));
  r.rel_err = den > 1e-12 ? std::sqrt(num) / den : std::sqrt(num);
  return r;
}

inline hvp::Tensor random_tensor(hvp::Rng& rng, hvp::Shape shape, float lo,
                                 float hi, bool requires_grad = true) {
  hvp::Tensor t = hvp::Tensor::zeros(std::move(shape), requires_grad);
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace oracle
