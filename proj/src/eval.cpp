// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/eval.hpp"

#include <algorithm>
#include <cmath>

#include "hvp/kernels.hpp"
#include "hvp/parallel.hpp"
#include "hvp/rng.hpp"
#include "hvp/tensor.hpp"

namespace hvp {

FeatureBank extract_features(const ModelState& model, const Dataset& ds) {
  FeatureBank bank;
  bank.labels = ds.labels;
  bank.num_classes = ds.num_classes;
  bank.features.resize(ds.size() * kFeatureDim);

  const size_t chunk = 256;
  Tape no_grad(/*recording=*/false);
  for (size_t b0 = 0; b0 < ds.size(); b0 += chunk) {
    const size_t n = std::min(chunk, ds.size() - b0);
    std::vector<float> buf(n * kImageFloats);
    std::copy(ds.pixels.begin() + b0 * kImageFloats,
              ds.pixels.begin() + (b0 + n) * kImageFloats, buf.begin());
    Tensor imgs = Tensor::from_data(
        {static_cast<int64_t>(n), 3, kImageSize, kImageSize}, std::move(buf));
    Tensor h = encode(no_grad, imgs, model);
    std::copy(h.data(), h.data() + n * kFeatureDim,
              bank.features.begin() + b0 * kFeatureDim);
  }
  return bank;
}

namespace {

std::vector<float> normalized_rows(const FeatureBank& bank, float eps) {
  std::vector<float> out(bank.features.size());
  const int d = bank.dim;
  for (size_t i = 0; i < bank.size(); ++i) {
    const float* r = bank.row(i);
    float ss = 0.0f;
    for (int j = 0; j < d; ++j) ss += r[j] * r[j];
    const float norm = std::sqrt(ss);
    const float inv = 1.0f / (norm > eps ? norm : eps);
    for (int j = 0; j < d; ++j) out[i * d + j] = r[j] * inv;
  }
  return out;
}

}  // namespace

double knn_eval(const FeatureBank& train, const FeatureBank& test, int k,
                float temperature) {
  HVP_CHECK(train.size() > 0 && test.size() > 0, "knn_eval: empty bank");
  HVP_CHECK(k >= 1 && static_cast<size_t>(k) <= train.size(),
            "knn_eval: k must lie in [1, train size]");
  HVP_CHECK(temperature > 0.0f, "knn_eval: temperature must be positive");
  HVP_CHECK(train.dim == test.dim, "knn_eval: feature width mismatch");

  const int d = train.dim;
  const size_t ntr = train.size(), nte = test.size();
  const int ncls = std::max(train.num_classes, test.num_classes);
  auto tr = normalized_rows(train, 1e-12f);
  auto te = normalized_rows(test, 1e-12f);

  // cosine similarities via the gemm kernel: te [nte,d] * tr^T [d,ntr]
  std::vector<float> trT(tr.size());
  for (size_t i = 0; i < ntr; ++i)
    for (int j = 0; j < d; ++j) trT[static_cast<size_t>(j) * ntr + i] = tr[i * d + j];

  std::vector<int64_t> correct_flags(nte, 0);
  parallel_for(nte, [&](size_t t0, size_t t1) {
    std::vector<float> sims(ntr);
    std::vector<int> top_idx(k);
    std::vector<float> top_sim(k);
    std::vector<double> votes(ncls);
    for (size_t t = t0; t < t1; ++t) {
      std::fill(sims.begin(), sims.end(), 0.0f);
      kernels::active_ops().gemm_accum(sims.data(), te.data() + t * d,
                                       trT.data(), 1, d, ntr);
      // top-k, ties to the earlier index
      int filled = 0;
      for (size_t j = 0; j < ntr; ++j) {
        const float s = sims[j];
        if (filled < k) {
          int pos = filled++;
          while (pos > 0 && top_sim[pos - 1] < s) {
            top_sim[pos] = top_sim[pos - 1];
            top_idx[pos] = top_idx[pos - 1];
            --pos;
          }
          top_sim[pos] = s;
          top_idx[pos] = static_cast<int>(j);
        } else if (s > top_sim[k - 1]) {
          int pos = k - 1;
          while (pos > 0 && top_sim[pos - 1] < s) {
            top_sim[pos] = top_sim[pos - 1];
            top_idx[pos] = top_idx[pos - 1];
            --pos;
          }
          top_sim[pos] = s;
          top_idx[pos] = static_cast<int>(j);
        }
      }
      std::fill(votes.begin(), votes.end(), 0.0);
      for (int q = 0; q < filled; ++q)
        votes[train.labels[top_idx[q]]] +=
            std::exp(static_cast<double>(top_sim[q]) / temperature);
      int pred = 0;
      for (int c = 1; c < ncls; ++c)
        if (votes[c] > votes[pred]) pred = c;
      correct_flags[t] = pred == test.labels[t] ? 1 : 0;
    }
  });
  int64_t correct = 0;
  for (int64_t f : correct_flags) correct += f;
  return static_cast<double>(correct) / static_cast<double>(nte);
}

double linear_probe(const FeatureBank& train, const FeatureBank& test,
                    int epochs, float lr, uint64_t seed) {
  HVP_CHECK(train.size() > 0 && test.size() > 0, "linear_probe: empty bank");
  const int d = train.dim;
  const int ncls = std::max(train.num_classes, test.num_classes);

  Tensor W = Tensor::zeros({d, ncls}, /*requires_grad=*/true);
  Tensor b = Tensor::zeros({ncls}, /*requires_grad=*/true);
  OptimizerState opt = OptimizerState::for_params({W, b}, 0.9f, 0.0f);

  const size_t batch = std::min<size_t>(256, train.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const BatchPlan plan = batches(train.size(), batch, seed ^ 0x70726f626eull,
                                   epoch);
    for (size_t bi = 0; bi < plan.num_batches(); ++bi) {
      const auto idx = plan.batch(bi);
      std::vector<float> xb(idx.size() * d);
      std::vector<int> yb(idx.size());
      for (size_t i = 0; i < idx.size(); ++i) {
        std::copy(train.row(idx[i]), train.row(idx[i]) + d,
                  xb.begin() + i * d);
        yb[i] = train.labels[idx[i]];
      }
      Tape tape;
      Tensor x = Tensor::from_data(
          {static_cast<int64_t>(idx.size()), d}, std::move(xb));
      Tensor logits = ops::affine(tape, x, W, b);
      Tensor loss =
          ops::mean_all(tape, ops::softmax_cross_entropy(tape, logits, yb));
      tape.backward(loss);
      sgd_step(opt, lr);
    }
  }

  // test accuracy; argmax ties break to the lowest class index
  Tape no_grad(false);
  std::vector<float> xt(test.features);
  Tensor x = Tensor::from_data({static_cast<int64_t>(test.size()), d},
                               std::move(xt));
  Tensor logits = ops::affine(no_grad, x, W, b);
  int64_t correct = 0;
  for (size_t i = 0; i < test.size(); ++i) {
    const float* row = logits.data() + i * ncls;
    int pred = 0;
    for (int c = 1; c < ncls; ++c)
      if (row[c] > row[pred]) pred = c;
    if (pred == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

namespace {

// cyclic Jacobi eigenvalues of a symmetric matrix (values only)
std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-22) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = a[i * n + p], aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a[p * n + i], aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a[i * n + i];
  return eig;
}

}  // namespace

CollapseMetrics collapse_metrics(const FeatureBank& bank) {
  HVP_CHECK(bank.size() >= 2, "collapse_metrics: need at least 2 rows");
  const int d = bank.dim;
  const size_t n = bank.size();
  auto x = normalized_rows(bank, 1e-12f);

  CollapseMetrics cm;
  double std_sum = 0.0;
  for (int j = 0; j < d; ++j) {
    double mean = 0.0, sq = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double v = x[i * d + j];
      mean += v;
      sq += v * v;
    }
    mean /= static_cast<double>(n);
    sq /= static_cast<double>(n);
    std_sum += std::sqrt(std::max(0.0, sq - mean * mean));
  }
  cm.per_dim_std_mean = std_sum / d;

  // singular values of X via eigenvalues of the Gram matrix X^T X
  std::vector<double> gram(static_cast<size_t>(d) * d, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (int p = 0; p < d; ++p) {
      const double xp = x[i * d + p];
      if (xp == 0.0) continue;
      for (int q = 0; q < d; ++q) gram[p * d + q] += xp * x[i * d + q];
    }
  auto eig = symmetric_eigenvalues(std::move(gram), d);
  std::vector<double> sv;
  double total = 0.0;
  for (double e : eig) {
    const double s = std::sqrt(std::max(0.0, e));
    sv.push_back(s);
    total += s;
  }
  if (total <= 0.0) {
    cm.effective_rank = 1.0;
    return cm;
  }
  double entropy = 0.0;
  for (double s : sv) {
    const double p = s / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  cm.effective_rank = std::exp(entropy);
  return cm;
}

}  // namespace hvp
