// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// "HVPCKPT1" checkpoint container: 8-byte magic, u32 little-endian header
/// length, JSON header (widths, seed, step, config hash, counters, tensor
/// table with byte offsets), then little-endian float32 blobs in declared
/// order. Round-trips are bit-exact.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hvp/model.hpp"

namespace hvp {

struct RunCounters {
  uint64_t selection_forward_count = 0;
  uint64_t training_forward_count = 0;
  uint64_t optimizer_steps = 0;
  double wall_seconds = 0.0;
};

struct CheckpointMeta {
  uint64_t seed = 0;
  int64_t step = 0;   // optimizer steps completed
  int epoch = -1;     // last completed epoch
  uint64_t config_hash = 0;
  ModelWidths widths;
  RunCounters counters;
};

struct Checkpoint {
  ModelState model;
  // velocity buffers in group order (encoder+projector group, then predictor)
  std::vector<std::vector<float>> main_velocity;
  std::vector<std::vector<float>> pred_velocity;
  CheckpointMeta meta;
};

void save_checkpoint(const std::string& path, const ModelState& model,
                     const std::vector<std::vector<float>>& main_velocity,
                     const std::vector<std::vector<float>>& pred_velocity,
                     const CheckpointMeta& meta);

Checkpoint load_checkpoint(const std::string& path);  // throws FormatError

// model-only convenience for evaluation
ModelState load_model(const std::string& path);

}  // namespace hvp
