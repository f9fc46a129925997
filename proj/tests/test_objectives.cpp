// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "hvp/objectives.hpp"
#include "support/oracle.hpp"

using namespace hvp;

namespace {
Tensor rows2(std::vector<float> r0, std::vector<float> r1) {
  std::vector<float> data = r0;
  data.insert(data.end(), r1.begin(), r1.end());
  return Tensor::from_data({2, static_cast<int64_t>(r0.size())}, data);
}
}  // namespace

TEST_CASE("neg_cosine: self, orthogonal, antipodal") {
  Tape t(false);
  Tensor a = rows2({1, 0}, {0, 1});
  CHECK(neg_cosine(t, a, a).data()[0] == doctest::Approx(-1.0f));
  Tensor b = rows2({0, 1}, {1, 0});
  CHECK(neg_cosine(t, a, b).data()[0] == doctest::Approx(0.0f));
  Tape t2(false);
  Tensor c = rows2({-1, 0}, {0, -1});
  CHECK(neg_cosine(t2, a, c).data()[0] == doctest::Approx(1.0f));
}

TEST_CASE("simsiam_pair_loss hand examples") {
  Tape t(false);
  Tensor u = rows2({1, 0}, {0, 1});
  // p_k = z_l and p_l = z_k on unit rows -> -1
  CHECK(simsiam_pair_loss(t, u, u, u, u).data()[0] == doctest::Approx(-1.0f));

  // mutually orthogonal -> 0
  Tensor pk = rows2({1, 0, 0, 0}, {1, 0, 0, 0});
  Tensor zl = rows2({0, 1, 0, 0}, {0, 1, 0, 0});
  Tensor pl = rows2({0, 0, 1, 0}, {0, 0, 1, 0});
  Tensor zk = rows2({0, 0, 0, 1}, {0, 0, 0, 1});
  CHECK(simsiam_pair_loss(t, pk, zl, pl, zk).data()[0] ==
        doctest::Approx(0.0f));

  // p_k = z_l, p_l = -z_k -> 0.5*(-1+1) = 0
  Tensor x = rows2({1, 0}, {1, 0});
  Tensor nx = rows2({-1, 0}, {-1, 0});
  CHECK(simsiam_pair_loss(t, x, x, nx, x).data()[0] == doctest::Approx(0.0f));

  // range check on random inputs
  Rng rng(8);
  Tensor ra = oracle::random_tensor(rng, {8, 16}, -1, 1, false);
  Tensor rb = oracle::random_tensor(rng, {8, 16}, -1, 1, false);
  Tensor rc = oracle::random_tensor(rng, {8, 16}, -1, 1, false);
  Tensor rd = oracle::random_tensor(rng, {8, 16}, -1, 1, false);
  Tensor l = simsiam_pair_loss(t, ra, rb, rc, rd);
  for (int i = 0; i < 8; ++i) {
    CHECK(l.data()[i] >= -1.0f - 1e-6f);
    CHECK(l.data()[i] <= 1.0f + 1e-6f);
  }
}

TEST_CASE("simsiam stop-gradient: no gradient reaches the z arguments") {
  Rng rng(15);
  for (int inst = 0; inst < 20; ++inst) {
    Tensor pk = oracle::random_tensor(rng, {3, 8}, -1, 1, true);
    Tensor pl = oracle::random_tensor(rng, {3, 8}, -1, 1, true);
    Tensor zk = oracle::random_tensor(rng, {3, 8}, -1, 1, true);
    Tensor zl = oracle::random_tensor(rng, {3, 8}, -1, 1, true);
    zk.ensure_grad();
    zl.ensure_grad();
    Tape t;
    Tensor loss = ops::mean_all(t, simsiam_pair_loss(t, pk, zl, pl, zk));
    t.backward(loss);
    for (const Tensor& z : {zk, zl})
      for (float g : z.grad_vec()) CHECK(g == 0.0f);
    bool p_has_grad = false;
    for (float g : pk.grad_vec()) p_has_grad |= g != 0.0f;
    CHECK(p_has_grad);
  }
}

TEST_CASE("simclr_pair_loss hand examples") {
  Tape t(false);
  // M=2, tau=1, z1k=z1l=(1,0), z2k=z2l=(0,1): sample-1 loss = -1
  Tensor zk = rows2({1, 0}, {0, 1});
  Tensor zl = rows2({1, 0}, {0, 1});
  Tensor l = simclr_pair_loss(t, zk, zl, 1.0f);
  CHECK(l.data()[0] == doctest::Approx(-1.0f));
  CHECK(l.data()[1] == doctest::Approx(-1.0f));

  // all embeddings identical -> log(M-1)
  const int m = 5;
  std::vector<float> same;
  for (int i = 0; i < m; ++i) {
    same.push_back(0.6f);
    same.push_back(0.8f);
  }
  Tensor zs = Tensor::from_data({m, 2}, same);
  Tensor ls = simclr_pair_loss(t, zs, zs, 0.5f);
  for (int i = 0; i < m; ++i)
    CHECK(ls.data()[i] == doctest::Approx(std::log(m - 1.0f)).epsilon(1e-4));

  // cosine scale invariance
  Rng rng(2);
  Tensor a = oracle::random_tensor(rng, {4, 8}, -1, 1, false);
  Tensor b = oracle::random_tensor(rng, {4, 8}, -1, 1, false);
  Tensor l1 = simclr_pair_loss(t, a, b, 0.3f);
  Tensor a3 = ops::scale(t, a, 3.0f);
  Tensor b7 = ops::scale(t, b, 7.0f);
  Tensor l2 = simclr_pair_loss(t, a3, b7, 0.3f);
  for (int i = 0; i < 4; ++i)
    CHECK(l1.data()[i] == doctest::Approx(l2.data()[i]).epsilon(1e-4));

  // M < 2 -> contract violation (empty denominator)
  Tensor single = Tensor::from_data({1, 2}, {1, 0});
  CHECK_THROWS_AS(simclr_pair_loss(t, single, single, 1.0f),
                  ContractViolation);
}

TEST_CASE("simclr log-sum-exp stability at large norms and small tau") {
  Tape t(false);
  Rng rng(44);
  for (float scale : {1.0f, 100.0f, 1000.0f}) {
    Tensor a = oracle::random_tensor(rng, {6, 8}, -scale, scale, false);
    Tensor b = oracle::random_tensor(rng, {6, 8}, -scale, scale, false);
    for (float tau : {0.05f, 0.1f, 1.0f}) {
      for (auto den : {SimclrDenominator::kCrossViewExclusive,
                       SimclrDenominator::kNtXent}) {
        Tensor l = simclr_pair_loss(t, a, b, tau, den);
        for (int i = 0; i < 6; ++i) CHECK(std::isfinite(l.data()[i]));
      }
    }
  }
}

TEST_CASE("pairwise_loss_matrix: combinatorics and degenerate cases") {
  Rng rng(5);
  const int m = 4, d = 8;
  ViewEmbeddings emb;
  Tape t(false);
  for (int n = 0; n < 4; ++n) {
    emb.z.push_back(ops::l2_normalize(
        t, oracle::random_tensor(rng, {m, d}, -1, 1, false)));
    emb.p.push_back(ops::l2_normalize(
        t, oracle::random_tensor(rng, {m, d}, -1, 1, false)));
  }
  Rng cap_rng(1);
  PairLossMatrix pm = pairwise_loss_matrix(emb, Objective::kSimSiam, 0.1f,
                                           SimclrDenominator::kCrossViewExclusive,
                                           128, cap_rng);
  CHECK(pm.p() == 6);
  const std::vector<std::pair<int, int>> want = {{0, 1}, {0, 2}, {0, 3},
                                                 {1, 2}, {1, 3}, {2, 3}};
  CHECK(pm.pair_index == want);

  // every entry equals an independently recomputed sample-wise loss
  for (int q = 0; q < pm.p(); ++q) {
    const auto [k, l] = pm.pair_index[q];
    Tensor col = simsiam_pair_loss(t, emb.p[k], emb.z[l], emb.p[l], emb.z[k]);
    for (int s = 0; s < m; ++s) CHECK(pm.at(s, q) == col.data()[s]);
  }

  // N=2: single pair, column equals the direct loss
  ViewEmbeddings emb2;
  emb2.z = {emb.z[0], emb.z[1]};
  emb2.p = {emb.p[0], emb.p[1]};
  Rng cr2(2);
  PairLossMatrix pm2 = pairwise_loss_matrix(emb2, Objective::kSimSiam, 0.1f,
                                            SimclrDenominator::kCrossViewExclusive,
                                            128, cr2);
  CHECK(pm2.p() == 1);
  Tensor direct =
      simsiam_pair_loss(t, emb2.p[0], emb2.z[1], emb2.p[1], emb2.z[0]);
  for (int s = 0; s < m; ++s) CHECK(pm2.at(s, 0) == direct.data()[s]);

  CHECK_THROWS_AS(pairwise_loss_matrix(emb, Objective::kSimSiam, 0.1f,
                                       SimclrDenominator::kCrossViewExclusive,
                                       0, cap_rng),
                  ContractViolation);
}

TEST_CASE("pair cap subsamples without replacement, seeded") {
  Rng rng(6);
  const int m = 2, d = 4, n_views = 8;  // 28 pairs
  ViewEmbeddings emb;
  Tape t(false);
  for (int n = 0; n < n_views; ++n) {
    emb.z.push_back(oracle::random_tensor(rng, {m, d}, -1, 1, false));
    emb.p.push_back(oracle::random_tensor(rng, {m, d}, -1, 1, false));
  }
  Rng cap_rng = Rng::keyed(9, 1);
  PairLossMatrix pm = pairwise_loss_matrix(emb, Objective::kSimSiam, 0.1f,
                                           SimclrDenominator::kCrossViewExclusive,
                                           10, cap_rng);
  CHECK(pm.p() == 10);
  for (size_t i = 1; i < pm.pair_index.size(); ++i)
    CHECK(pm.pair_index[i - 1] < pm.pair_index[i]);  // sorted, distinct
  Rng cap_rng2 = Rng::keyed(9, 1);
  PairLossMatrix pm2 = pairwise_loss_matrix(emb, Objective::kSimSiam, 0.1f,
                                            SimclrDenominator::kCrossViewExclusive,
                                            10, cap_rng2);
  CHECK(pm.pair_index == pm2.pair_index);  // seeded determinism
}

TEST_CASE("symmetrized losses satisfy loss(k,l) == loss(l,k)") {
  Tape t(false);
  Rng rng(3);
  Tensor zk = oracle::random_tensor(rng, {5, 8}, -1, 1, false);
  Tensor zl = oracle::random_tensor(rng, {5, 8}, -1, 1, false);
  Tensor pk = oracle::random_tensor(rng, {5, 8}, -1, 1, false);
  Tensor pl = oracle::random_tensor(rng, {5, 8}, -1, 1, false);
  Tensor f = simsiam_pair_loss(t, pk, zl, pl, zk);
  Tensor g = simsiam_pair_loss(t, pl, zk, pk, zl);
  for (int i = 0; i < 5; ++i)
    CHECK(f.data()[i] == doctest::Approx(g.data()[i]).epsilon(1e-6));
  Tensor sf = simclr_pair_loss(t, zk, zl, 0.2f);
  Tensor sg = simclr_pair_loss(t, zl, zk, 0.2f);
  for (int i = 0; i < 5; ++i)
    CHECK(sf.data()[i] == doctest::Approx(sg.data()[i]).epsilon(1e-6));
}
