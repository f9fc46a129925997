// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// Sample-wise SSL losses and the pairwise loss matrix over N views.

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hvp/rng.hpp"
#include "hvp/tensor.hpp"

namespace hvp {

enum class Objective { kSimSiam, kSimCLR };

// Which denominator the SimCLR loss uses: the literal form (cross-view
// negatives excluding the positive term) or standard NT-Xent (positive
// included, plus same-view negatives).
enum class SimclrDenominator { kCrossViewExclusive, kNtXent };

// per-row -<a,b>/(max(|a|,eps)*max(|b|,eps)), eps = 1e-8
Tensor neg_cosine(Tape& tape, const Tensor& a, const Tensor& b);

// 0.5*(D(p_k, sg(z_l)) + D(p_l, sg(z_k))) per sample; sg = stop-gradient
Tensor simsiam_pair_loss(Tape& tape, const Tensor& p_k, const Tensor& z_l,
                         const Tensor& p_l, const Tensor& z_k);

// Symmetrized per-sample contrastive loss between view sets k and l.
Tensor simclr_pair_loss(Tape& tape, const Tensor& z_k, const Tensor& z_l,
                        float tau,
                        SimclrDenominator denom = SimclrDenominator::kCrossViewExclusive);

// Cached per-view embeddings for the selection phase (no gradients).
struct ViewEmbeddings {
  // simsiam: z[n] = projector outputs, p[n] = predictor outputs
  // simclr:  z[n] used; p left empty
  std::vector<Tensor> z;
  std::vector<Tensor> p;
  int n_views() const { return static_cast<int>(z.size()); }
};

struct PairLossMatrix {
  std::vector<std::pair<int, int>> pair_index;  // (k,l), k < l
  std::vector<float> losses;                    // [M, P] row-major
  int64_t m = 0;
  int p() const { return static_cast<int>(pair_index.size()); }
  float at(int64_t sample, int pair) const {
    return losses[sample * pair_index.size() + pair];
  }
};

// all C(N,2) pairs in lexicographic order
std::vector<std::pair<int, int>> all_pairs(int n_views);

// Evaluates the sample-wise objective for every candidate pair; when
// C(N,2) > pair_cap a seeded uniform subsample (without replacement) of
// pair_cap pairs is used. Gradient-free.
PairLossMatrix pairwise_loss_matrix(const ViewEmbeddings& emb,
                                    Objective objective, float tau,
                                    SimclrDenominator denom, int pair_cap,
                                    Rng& rng);

}  // namespace hvp
