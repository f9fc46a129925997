// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// Frozen-feature evaluation: weighted k-NN, linear probe, collapse metrics.

#pragma once

#include <cstdint>
#include <vector>

#include "hvp/dataset.hpp"
#include "hvp/model.hpp"

namespace hvp {

struct FeatureBank {
  std::vector<float> features;  // [n, dim] row-major
  int dim = kFeatureDim;
  std::vector<int> labels;
  int num_classes = 10;

  size_t size() const { return labels.size(); }
  const float* row(size_t i) const { return features.data() + i * dim; }
};

// Encoder features on center-crop preprocessing (identity at 32x32).
FeatureBank extract_features(const ModelState& model, const Dataset& ds);

// Cosine top-k neighbors vote their class with weight exp(sim/temperature);
// ties break to the lowest class index.
double knn_eval(const FeatureBank& train, const FeatureBank& test, int k = 20,
                float temperature = 0.07f);

// Affine classifier + softmax cross-entropy by minibatch SGD on frozen
// features; returns test accuracy.
double linear_probe(const FeatureBank& train, const FeatureBank& test,
                    int epochs = 50, float lr = 0.1f, uint64_t seed = 0);

struct CollapseMetrics {
  double per_dim_std_mean = 0.0;  // mean over dims of std of L2-normalized rows
  double effective_rank = 0.0;    // exp(entropy of normalized singular values)
};

CollapseMetrics collapse_metrics(const FeatureBank& bank);

}  // namespace hvp
