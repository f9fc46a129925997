// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference gradient suite over every differentiable op, backed by
// the independent double-precision oracle. Shared by the unit tests and the
// acceptance runner.

#pragma once

#include <string>
#include <vector>

#include "hvp/config.hpp"
#include "hvp/model.hpp"
#include "hvp/objectives.hpp"
#include "support/oracle.hpp"

namespace fdsuite {

using hvp::Rng;
using hvp::Tape;
using hvp::Tensor;
using oracle::DVec;

struct OpResult {
  std::string op;
  double max_rel_err = 0.0;
  size_t instances = 0;
};

// scalarizes a float output tensor as mean(out * w) with constant weights
inline Tensor weighted(Tape& tape, const Tensor& out, const Tensor& w) {
  return hvp::ops::mean_all(tape, hvp::ops::mul(tape, out, w));
}

inline double weighted_d(const DVec& out, const DVec& w) {
  DVec prod(out.size());
  for (size_t i = 0; i < out.size(); ++i) prod[i] = out[i] * w[i];
  return oracle::mean(prod);
}

// keeps relu/abs inputs away from the kink so central differences are valid
inline void away_from_zero(Tensor& t, float margin) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    float& v = t.data()[i];
    if (v >= 0.0f && v < margin) v += margin;
    if (v < 0.0f && v > -margin) v -= margin;
  }
}

template <typename MakeInstance>
OpResult run_op(const std::string& name, int instances, uint64_t seed,
                MakeInstance make) {
  OpResult r;
  r.op = name;
  r.instances = instances;
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng = Rng::keyed(seed, hvp::fnv1a64(name), inst);
    Rng coord_rng = Rng::keyed(seed ^ 0xfdfdfdfd, hvp::fnv1a64(name), inst);
    auto [inputs, fwd_d, build] = make(rng);
    oracle::FdCheck c =
        oracle::check_gradients(inputs, fwd_d, build, coord_rng);
    if (c.rel_err > r.max_rel_err) r.max_rel_err = c.rel_err;
  }
  return r;
}

using Instance =
    std::tuple<std::vector<Tensor>,
               std::function<double(const std::vector<DVec>&)>,
               std::function<Tensor(Tape&)>>;

inline std::vector<OpResult> run_fd_suite(int instances, uint64_t seed) {
  std::vector<OpResult> results;
  auto add = [&](OpResult r) { results.push_back(std::move(r)); };

  add(run_op("affine", instances, seed, [](Rng& rng) -> Instance {
    const int m = 2 + static_cast<int>(rng.next_below(3));
    const int din = 2 + static_cast<int>(rng.next_below(4));
    const int dout = 2 + static_cast<int>(rng.next_below(4));
    Tensor x = oracle::random_tensor(rng, {m, din}, -1, 1);
    Tensor w = oracle::random_tensor(rng, {din, dout}, -1, 1);
    Tensor b = oracle::random_tensor(rng, {dout}, -1, 1);
    Tensor wt = oracle::random_tensor(rng, {m, dout}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{x, w, b},
            [=](const std::vector<DVec>& in) {
              return weighted_d(oracle::affine(in[0], in[1], in[2], m, din, dout),
                                wtd);
            },
            [=](Tape& t) {
              return weighted(t, hvp::ops::affine(t, x, w, b), wt);
            }};
  }));

  struct ConvCase { int stride, pad, hw; };
  for (ConvCase cc : {ConvCase{1, 0, 6}, ConvCase{1, 1, 6}, ConvCase{2, 0, 7},
                      ConvCase{2, 1, 7}}) {
    add(run_op("conv2d_s" + std::to_string(cc.stride) + "p" +
                   std::to_string(cc.pad),
               instances, seed, [cc](Rng& rng) -> Instance {
      const int m = 1 + static_cast<int>(rng.next_below(2));
      const int c = 1 + static_cast<int>(rng.next_below(2));
      const int f = 1 + static_cast<int>(rng.next_below(3));
      const int hw = cc.hw;
      Tensor x = oracle::random_tensor(rng, {m, c, hw, hw}, -1, 1);
      Tensor k = oracle::random_tensor(rng, {f, c, 3, 3}, -1, 1);
      int oh = 0, ow = 0;
      DVec probe = oracle::conv2d(oracle::to_double(x), oracle::to_double(k),
                                  m, c, hw, hw, f, cc.stride, cc.pad, &oh, &ow);
      Tensor wt = oracle::random_tensor(rng, {m, f, oh, ow}, -1, 1, false);
      DVec wtd = oracle::to_double(wt);
      const int stride = cc.stride, pad = cc.pad;
      return {{x, k},
              [=](const std::vector<DVec>& in) {
                int a, b;
                return weighted_d(oracle::conv2d(in[0], in[1], m, c, hw, hw, f,
                                                 stride, pad, &a, &b),
                                  wtd);
              },
              [=](Tape& t) {
                return weighted(t, hvp::ops::conv2d(t, x, k, stride, pad), wt);
              }};
    }));
  }

  add(run_op("channel_bias", instances, seed, [](Rng& rng) -> Instance {
    const int m = 2, c = 3, s = 4;
    Tensor x = oracle::random_tensor(rng, {m, c, s, s}, -1, 1);
    Tensor b = oracle::random_tensor(rng, {c}, -1, 1);
    Tensor wt = oracle::random_tensor(rng, {m, c, s, s}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{x, b},
            [=](const std::vector<DVec>& in) {
              return weighted_d(oracle::channel_bias(in[0], in[1], m, c, s * s),
                                wtd);
            },
            [=](Tape& t) {
              return weighted(t, hvp::ops::channel_bias(t, x, b), wt);
            }};
  }));

  add(run_op("relu", instances, seed, [](Rng& rng) -> Instance {
    const int m = 3, d = 5;
    Tensor x = oracle::random_tensor(rng, {m, d}, -1, 1);
    away_from_zero(x, 0.05f);
    Tensor wt = oracle::random_tensor(rng, {m, d}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{x},
            [=](const std::vector<DVec>& in) {
              return weighted_d(oracle::relu(in[0]), wtd);
            },
            [=](Tape& t) { return weighted(t, hvp::ops::relu(t, x), wt); }};
  }));

  add(run_op("global_average_pool", instances, seed, [](Rng& rng) -> Instance {
    const int m = 2, c = 3, s = 4;
    Tensor x = oracle::random_tensor(rng, {m, c, s, s}, -1, 1);
    Tensor wt = oracle::random_tensor(rng, {m, c}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{x},
            [=](const std::vector<DVec>& in) {
              return weighted_d(oracle::gap(in[0], m, c, s * s), wtd);
            },
            [=](Tape& t) {
              return weighted(t, hvp::ops::global_average_pool(t, x), wt);
            }};
  }));

  add(run_op("l2_normalize", instances, seed, [](Rng& rng) -> Instance {
    const int m = 3, d = 6;
    Tensor x = oracle::random_tensor(rng, {m, d}, -1, 1);
    // keep rows away from the eps clamp and the h-neighborhood of zero norm
    for (int i = 0; i < m; ++i) {
      float ss = 0;
      for (int j = 0; j < d; ++j) ss += x.data()[i * d + j] * x.data()[i * d + j];
      if (ss < 0.25f)
        for (int j = 0; j < d; ++j) x.data()[i * d + j] += 0.5f;
    }
    Tensor wt = oracle::random_tensor(rng, {m, d}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{x},
            [=](const std::vector<DVec>& in) {
              return weighted_d(oracle::l2_normalize(in[0], m, d, 1e-8), wtd);
            },
            [=](Tape& t) {
              return weighted(t, hvp::ops::l2_normalize(t, x), wt);
            }};
  }));

  add(run_op("row_dot", instances, seed, [](Rng& rng) -> Instance {
    const int m = 3, d = 5;
    Tensor a = oracle::random_tensor(rng, {m, d}, -1, 1);
    Tensor b = oracle::random_tensor(rng, {m, d}, -1, 1);
    Tensor wt = oracle::random_tensor(rng, {m}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{a, b},
            [=](const std::vector<DVec>& in) {
              return weighted_d(oracle::row_dot(in[0], in[1], m, d), wtd);
            },
            [=](Tape& t) { return weighted(t, hvp::ops::row_dot(t, a, b), wt); }};
  }));

  add(run_op("matmul_nt", instances, seed, [](Rng& rng) -> Instance {
    const int m = 3, d = 4, n = 5;
    Tensor a = oracle::random_tensor(rng, {m, d}, -1, 1);
    Tensor b = oracle::random_tensor(rng, {n, d}, -1, 1);
    Tensor wt = oracle::random_tensor(rng, {m, n}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{a, b},
            [=](const std::vector<DVec>& in) {
              return weighted_d(oracle::matmul_nt(in[0], in[1], m, d, n), wtd);
            },
            [=](Tape& t) {
              return weighted(t, hvp::ops::matmul_nt(t, a, b), wt);
            }};
  }));

  add(run_op("add_sub_mul_scale", instances, seed, [](Rng& rng) -> Instance {
    const int m = 3, d = 4;
    Tensor a = oracle::random_tensor(rng, {m, d}, -1, 1);
    Tensor b = oracle::random_tensor(rng, {m, d}, -1, 1);
    Tensor wt = oracle::random_tensor(rng, {m, d}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    const float c = rng.uniform(0.5f, 2.0f);
    return {{a, b},
            [=](const std::vector<DVec>& in) {
              DVec v(in[0].size());
              for (size_t i = 0; i < v.size(); ++i)
                v[i] = (in[0][i] + in[1][i]) * (in[0][i] - in[1][i]) * c;
              return weighted_d(v, wtd);
            },
            [=](Tape& t) {
              Tensor s = hvp::ops::mul(t, hvp::ops::add(t, a, b),
                                       hvp::ops::sub(t, a, b));
              return weighted(t, hvp::ops::scale(t, s, c), wt);
            }};
  }));

  add(run_op("diag_logsumexp", instances, seed, [](Rng& rng) -> Instance {
    const int m = 4;
    Tensor x = oracle::random_tensor(rng, {m, m}, -2, 2);
    Tensor wt = oracle::random_tensor(rng, {m}, -1, 1, false);
    Tensor wt2 = oracle::random_tensor(rng, {m}, -1, 1, false);
    DVec wtd = oracle::to_double(wt), wtd2 = oracle::to_double(wt2);
    return {{x},
            [=](const std::vector<DVec>& in) {
              DVec diag(m);
              for (int i = 0; i < m; ++i) diag[i] = in[0][i * m + i];
              return weighted_d(oracle::logsumexp_rows(in[0], m, m, true), wtd) +
                     weighted_d(diag, wtd2);
            },
            [=](Tape& t) {
              Tensor l = weighted(t, hvp::ops::logsumexp_rows(t, x, true), wt);
              Tensor d = weighted(t, hvp::ops::diag_part(t, x), wt2);
              return hvp::ops::add(t, l, d);
            }};
  }));

  add(run_op("logaddexp", instances, seed, [](Rng& rng) -> Instance {
    const int n = 6;
    Tensor a = oracle::random_tensor(rng, {n}, -2, 2);
    Tensor b = oracle::random_tensor(rng, {n}, -2, 2);
    Tensor wt = oracle::random_tensor(rng, {n}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{a, b},
            [=](const std::vector<DVec>& in) {
              DVec v(n);
              for (int i = 0; i < n; ++i) {
                const double mx = std::max(in[0][i], in[1][i]);
                v[i] = mx + std::log(std::exp(in[0][i] - mx) +
                                     std::exp(in[1][i] - mx));
              }
              return weighted_d(v, wtd);
            },
            [=](Tape& t) {
              return weighted(t, hvp::ops::logaddexp(t, a, b), wt);
            }};
  }));

  add(run_op("softmax_cross_entropy", instances, seed, [](Rng& rng) -> Instance {
    const int m = 4, c = 5;
    Tensor x = oracle::random_tensor(rng, {m, c}, -2, 2);
    std::vector<int> labels(m);
    for (int i = 0; i < m; ++i)
      labels[i] = static_cast<int>(rng.next_below(c));
    Tensor wt = oracle::random_tensor(rng, {m}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{x},
            [=](const std::vector<DVec>& in) {
              DVec v(m);
              DVec lse = oracle::logsumexp_rows(in[0], m, c, false);
              for (int i = 0; i < m; ++i) v[i] = lse[i] - in[0][i * c + labels[i]];
              return weighted_d(v, wtd);
            },
            [=](Tape& t) {
              return weighted(t, hvp::ops::softmax_cross_entropy(t, x, labels),
                              wt);
            }};
  }));

  add(run_op("neg_cosine", instances, seed, [](Rng& rng) -> Instance {
    const int m = 3, d = 6;
    Tensor a = oracle::random_tensor(rng, {m, d}, 0.2f, 1.0f);
    Tensor b = oracle::random_tensor(rng, {m, d}, 0.2f, 1.0f);
    Tensor wt = oracle::random_tensor(rng, {m}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    return {{a, b},
            [=](const std::vector<DVec>& in) {
              DVec an = oracle::l2_normalize(in[0], m, d, 1e-8);
              DVec bn = oracle::l2_normalize(in[1], m, d, 1e-8);
              DVec dots = oracle::row_dot(an, bn, m, d);
              for (double& v : dots) v = -v;
              return weighted_d(dots, wtd);
            },
            [=](Tape& t) { return weighted(t, hvp::neg_cosine(t, a, b), wt); }};
  }));

  // simsiam: finite differences over the predictor inputs; the stop-gradient
  // branches are frozen at their base values inside the oracle
  add(run_op("simsiam_pair_loss", instances, seed, [](Rng& rng) -> Instance {
    const int m = 3, d = 6;
    Tensor pk = oracle::random_tensor(rng, {m, d}, 0.2f, 1.0f);
    Tensor pl = oracle::random_tensor(rng, {m, d}, 0.2f, 1.0f);
    Tensor zk = oracle::random_tensor(rng, {m, d}, 0.2f, 1.0f, false);
    Tensor zl = oracle::random_tensor(rng, {m, d}, 0.2f, 1.0f, false);
    Tensor wt = oracle::random_tensor(rng, {m}, -1, 1, false);
    DVec wtd = oracle::to_double(wt);
    DVec zkd = oracle::to_double(zk), zld = oracle::to_double(zl);
    return {{pk, pl},
            [=](const std::vector<DVec>& in) {
              DVec pkn = oracle::l2_normalize(in[0], m, d, 1e-8);
              DVec pln = oracle::l2_normalize(in[1], m, d, 1e-8);
              DVec zkn = oracle::l2_normalize(zkd, m, d, 1e-8);
              DVec zln = oracle::l2_normalize(zld, m, d, 1e-8);
              DVec d1 = oracle::row_dot(pkn, zln, m, d);
              DVec d2 = oracle::row_dot(pln, zkn, m, d);
              DVec v(m);
              for (int i = 0; i < m; ++i) v[i] = 0.5 * (-d1[i] - d2[i]);
              return weighted_d(v, wtd);
            },
            [=](Tape& t) {
              return weighted(t, hvp::simsiam_pair_loss(t, pk, zl, pl, zk), wt);
            }};
  }));

  for (auto denom : {hvp::SimclrDenominator::kCrossViewExclusive,
                     hvp::SimclrDenominator::kNtXent}) {
    const std::string name =
        denom == hvp::SimclrDenominator::kCrossViewExclusive
            ? "simclr_pair_loss_excl"
            : "simclr_pair_loss_ntxent";
    add(run_op(name, instances, seed, [denom](Rng& rng) -> Instance {
      const int m = 4, d = 5;
      const float tau = rng.uniform(0.2f, 1.0f);
      Tensor zk = oracle::random_tensor(rng, {m, d}, 0.2f, 1.0f);
      Tensor zl = oracle::random_tensor(rng, {m, d}, 0.2f, 1.0f);
      Tensor wt = oracle::random_tensor(rng, {m}, -1, 1, false);
      DVec wtd = oracle::to_double(wt);
      auto direction = [=](const DVec& a, const DVec& b) {
        DVec an = oracle::l2_normalize(a, m, d, 1e-8);
        DVec bn = oracle::l2_normalize(b, m, d, 1e-8);
        DVec cross = oracle::matmul_nt(an, bn, m, d, m);
        for (double& v : cross) v /= tau;
        DVec out(m);
        if (denom == hvp::SimclrDenominator::kCrossViewExclusive) {
          DVec lse = oracle::logsumexp_rows(cross, m, m, true);
          for (int i = 0; i < m; ++i) out[i] = lse[i] - cross[i * m + i];
        } else {
          DVec same = oracle::matmul_nt(an, an, m, d, m);
          for (double& v : same) v /= tau;
          DVec l1 = oracle::logsumexp_rows(cross, m, m, false);
          DVec l2 = oracle::logsumexp_rows(same, m, m, true);
          for (int i = 0; i < m; ++i) {
            const double mx = std::max(l1[i], l2[i]);
            out[i] = mx + std::log(std::exp(l1[i] - mx) + std::exp(l2[i] - mx)) -
                     cross[i * m + i];
          }
        }
        return out;
      };
      return {{zk, zl},
              [=](const std::vector<DVec>& in) {
                DVec d1 = direction(in[0], in[1]);
                DVec d2 = direction(in[1], in[0]);
                DVec v(m);
                for (int i = 0; i < m; ++i) v[i] = 0.5 * (d1[i] + d2[i]);
                return weighted_d(v, wtd);
              },
              [=](Tape& t) {
                return weighted(t, hvp::simclr_pair_loss(t, zk, zl, tau, denom),
                                wt);
              }};
    }));
  }

  return results;
}

}  // namespace fdsuite
