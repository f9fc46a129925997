// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// End-to-end pretraining: view sampling, hard-pair selection, optimization,
/// scheduling, checkpointing, forward-pass accounting and selection logging.

#pragma once

#include <string>
#include <vector>

#include "hvp/checkpoint.hpp"
#include "hvp/config.hpp"
#include "hvp/dataset.hpp"

namespace hvp {

struct EpochMetrics {
  int epoch = 0;
  double mean_train_loss = 0.0;
  float lr_last = 0.0f;
  RunCounters counters;  // cumulative snapshot at epoch end
  double mean_selected_iou = 0.0;
  double mean_random_iou = 0.0;
  double frac_lowest_iou_selected = 0.0;
  bool has_selection_stats = false;
};

struct TrainResult {
  std::string final_checkpoint;
  std::vector<std::string> checkpoints;
  std::string selection_log_path;
  std::string metrics_csv_path;
  RunCounters counters;
  std::vector<EpochMetrics> epoch_metrics;
  int epochs_completed = 0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,mean_train_loss,lr,selection_forward_count,training_forward_count,"
    "wall_seconds,mean_selected_iou,mean_random_iou,frac_lowest_iou_selected";

// Runs Algorithm-style pretraining on the dataset. Writes per-epoch
// checkpoints, a JSONL selection log, a metrics CSV and counters.json into
// out_dir. Resuming from a checkpoint continues at the next epoch and
// reproduces the uninterrupted run bit-exactly. Throws TrainingAbort on
// non-finite losses (after writing a diagnostic checkpoint), ConfigError on
// config-hash mismatch at resume.
TrainResult pretrain(const TrainConfig& cfg, uint64_t config_hash,
                     const Dataset& ds, const std::string& out_dir,
                     const std::string& resume_from = "");

}  // namespace hvp
