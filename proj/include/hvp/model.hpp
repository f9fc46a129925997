// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hvp/tensor.hpp"

namespace hvp {

struct ModelWidths {
  int d_z = 64;    // projector output / predictor output
  int d_pred = 16; // predictor bottleneck

  bool operator==(const ModelWidths&) const = default;
};

// Encoder: 3 conv blocks 3->32->64->128 (3x3, stride 2 at blocks 2-3, bias +
// ReLU, no batch norm), global average pool. Projector: 128->256->d_z.
// Predictor: d_z->d_pred->d_z.
struct ModelState {
  Tensor conv1_w, conv1_b;
  Tensor conv2_w, conv2_b;
  Tensor conv3_w, conv3_b;
  Tensor proj_w1, proj_b1, proj_w2, proj_b2;
  Tensor pred_w1, pred_b1, pred_w2, pred_b2;
  ModelWidths widths;

  // declared checkpoint order
  std::vector<std::pair<std::string, Tensor>> named_params() const;
  std::vector<Tensor> encoder_projector_params() const;
  std::vector<Tensor> predictor_params() const;
  std::vector<Tensor> all_params() const;
};

inline constexpr int kFeatureDim = 128;

// Kaiming-uniform fan-in weights, zero biases; deterministic in seed.
ModelState init_model(uint64_t seed, const ModelWidths& widths);

Tensor encode(Tape& tape, const Tensor& images, const ModelState& m);  // [M,3,S,S] -> [M,128]
Tensor project(Tape& tape, const Tensor& h, const ModelState& m);      // [M,128] -> [M,d_z]
Tensor predict(Tape& tape, const Tensor& z, const ModelState& m);      // [M,d_z] -> [M,d_z]

}  // namespace hvp
