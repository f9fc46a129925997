// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "hvp/error.hpp"

namespace hvp {

Tensor neg_cosine(Tape& tape, const Tensor& a, const Tensor& b) {
  Tensor an = ops::l2_normalize(tape, a, 1e-8f);
  Tensor bn = ops::l2_normalize(tape, b, 1e-8f);
  return ops::scale(tape, ops::row_dot(tape, an, bn), -1.0f);
}

Tensor simsiam_pair_loss(Tape& tape, const Tensor& p_k, const Tensor& z_l,
                         const Tensor& p_l, const Tensor& z_k) {
  Tensor d1 = neg_cosine(tape, p_k, ops::stop_grad(z_l));
  Tensor d2 = neg_cosine(tape, p_l, ops::stop_grad(z_k));
  return ops::scale(tape, ops::add(tape, d1, d2), 0.5f);
}

namespace {

// one direction of the contrastive loss: anchors from `za`, positives and
// cross-view negatives from `zb`
Tensor simclr_direction(Tape& tape, const Tensor& za, const Tensor& zb,
                        float tau, SimclrDenominator denom) {
  Tensor zan = ops::l2_normalize(tape, za, 1e-8f);
  Tensor zbn = ops::l2_normalize(tape, zb, 1e-8f);
  const float inv_tau = 1.0f / tau;
  Tensor cross = ops::scale(tape, ops::matmul_nt(tape, zan, zbn), inv_tau);
  Tensor pos = ops::diag_part(tape, cross);
  if (denom == SimclrDenominator::kCrossViewExclusive) {
    // -log( exp(pos) / sum_{j != i} exp(cross_ij) )
    Tensor lse = ops::logsumexp_rows(tape, cross, /*exclude_diag=*/true);
    return ops::sub(tape, lse, pos);
  }
  // NT-Xent: positive included, same-view negatives added
  Tensor same = ops::scale(tape, ops::matmul_nt(tape, zan, zan), inv_tau);
  Tensor lse_cross = ops::logsumexp_rows(tape, cross, /*exclude_diag=*/false);
  Tensor lse_same = ops::logsumexp_rows(tape, same, /*exclude_diag=*/true);
  Tensor lse = ops::logaddexp(tape, lse_cross, lse_same);
  return ops::sub(tape, lse, pos);
}

}  // namespace

Tensor simclr_pair_loss(Tape& tape, const Tensor& z_k, const Tensor& z_l,
                        float tau, SimclrDenominator denom) {
  HVP_CHECK(tau > 0.0f, "simclr_pair_loss: tau must be positive");
  HVP_CHECK(z_k.ndim() == 2 && z_k.shape() == z_l.shape(),
            "simclr_pair_loss: embedding shapes differ");
  HVP_CHECK(z_k.dim(0) >= 2, "simclr_pair_loss: batch must have M >= 2");
  Tensor d1 = simclr_direction(tape, z_k, z_l, tau, denom);
  Tensor d2 = simclr_direction(tape, z_l, z_k, tau, denom);
  return ops::scale(tape, ops::add(tape, d1, d2), 0.5f);
}

std::vector<std::pair<int, int>> all_pairs(int n_views) {
  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < n_views; ++k)
    for (int l = k + 1; l < n_views; ++l) pairs.emplace_back(k, l);
  return pairs;
}

PairLossMatrix pairwise_loss_matrix(const ViewEmbeddings& emb,
                                    Objective objective, float tau,
                                    SimclrDenominator denom, int pair_cap,
                                    Rng& rng) {
  const int n = emb.n_views();
  HVP_CHECK(n >= 2, "pairwise_loss_matrix: need at least 2 views");
  HVP_CHECK(pair_cap >= 1, "pairwise_loss_matrix: pair_cap must be >= 1");
  if (objective == Objective::kSimSiam)
    HVP_CHECK(emb.p.size() == emb.z.size(),
              "pairwise_loss_matrix: simsiam needs predictor embeddings");

  PairLossMatrix pm;
  pm.pair_index = all_pairs(n);
  if (static_cast<int>(pm.pair_index.size()) > pair_cap) {
    // seeded uniform subsample without replacement, order preserved
    std::vector<std::pair<int, int>> pool = std::move(pm.pair_index);
    rng.shuffle(pool);
    pool.resize(pair_cap);
    std::sort(pool.begin(), pool.end());
    pm.pair_index = std::move(pool);
  }

  pm.m = emb.z[0].dim(0);
  pm.losses.resize(pm.m * pm.pair_index.size());
  Tape no_grad(/*recording=*/false);
  for (size_t pi = 0; pi < pm.pair_index.size(); ++pi) {
    const auto [k, l] = pm.pair_index[pi];
    Tensor col;
    if (objective == Objective::kSimSiam)
      col = simsiam_pair_loss(no_grad, emb.p[k], emb.z[l], emb.p[l], emb.z[k]);
    else
      col = simclr_pair_loss(no_grad, emb.z[k], emb.z[l], tau, denom);
    for (int64_t s = 0; s < pm.m; ++s)
      pm.losses[s * pm.pair_index.size() + pi] = col.data()[s];
  }
  return pm;
}

}  // namespace hvp
