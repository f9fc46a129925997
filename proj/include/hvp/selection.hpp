// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// Hard-view pair selection: per-sample argmax over candidate pair losses,
/// the cooperative/random ablation modes, the n-step gate and the manual
/// IoU rejection-sampling policy.

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hvp/augment.hpp"
#include "hvp/objectives.hpp"
#include "hvp/rng.hpp"

namespace hvp {

enum class SelectionMode { kAdversarial, kCooperative, kRandom };

struct SelectionResult {
  std::vector<int> chosen_pair;    // per sample: index into matrix pair_index
  std::vector<float> chosen_loss;  // per sample
  SelectionMode mode;
};

// Ties break to the lowest pair index. Random mode draws per sample from rng.
SelectionResult select_pairs(const PairLossMatrix& matrix, SelectionMode mode,
                             Rng& rng);

// true iff HVP applies at this step (phase 0 of each n_step cycle)
bool hvp_gate(int64_t step_index, int n_step);

struct IoUSchedule {
  float start = 0.30f;
  float end = 0.35f;
  int total_epochs = 1;
  bool inverse = false;    // swap endpoints
  bool alternate = false;  // apply the policy on alternate steps only
  int max_retries = 20;
};

float iou_threshold(int epoch, const IoUSchedule& sched);

// Samples view-parameter pairs until iou <= threshold or retries run out
// (then returns the lowest-IoU pair seen). `fallback` reports exhaustion.
std::pair<ViewParams, ViewParams> iou_rejection_sample(
    Rng& rng, const AugConfig& cfg, int src_w, int src_h, float threshold,
    int max_retries, bool* fallback = nullptr);

// One shared color-jitter draw for all N views of an iteration; crops and
// the other fields stay independent.
void static_appearance_mode(Rng& jitter_rng, const AugConfig& cfg,
                            std::vector<ViewParams>& views);

}  // namespace hvp
