// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/selection.hpp"

#include <cmath>

#include "hvp/error.hpp"

namespace hvp {

SelectionResult select_pairs(const PairLossMatrix& matrix, SelectionMode mode,
                             Rng& rng) {
  const int p = matrix.p();
  HVP_CHECK(matrix.m > 0 && p > 0, "select_pairs: empty loss matrix");
  for (float v : matrix.losses)
    HVP_CHECK(std::isfinite(v), "select_pairs: non-finite loss entry");

  SelectionResult res;
  res.mode = mode;
  res.chosen_pair.resize(matrix.m);
  res.chosen_loss.resize(matrix.m);
  for (int64_t s = 0; s < matrix.m; ++s) {
    int best = 0;
    if (mode == SelectionMode::kRandom) {
      best = static_cast<int>(rng.next_below(p));
    } else {
      for (int q = 1; q < p; ++q) {
        const float v = matrix.at(s, q);
        const float bv = matrix.at(s, best);
        if (mode == SelectionMode::kAdversarial ? v > bv : v < bv) best = q;
      }
    }
    res.chosen_pair[s] = best;
    res.chosen_loss[s] = matrix.at(s, best);
  }
  return res;
}

bool hvp_gate(int64_t step_index, int n_step) {
  HVP_CHECK(n_step >= 1, "hvp_gate: n_step must be >= 1");
  HVP_CHECK(step_index >= 0, "hvp_gate: negative step index");
  return step_index % n_step == 0;
}

float iou_threshold(int epoch, const IoUSchedule& sched) {
  HVP_CHECK(epoch >= 0 && epoch <= sched.total_epochs,
            "iou_threshold: epoch outside schedule");
  float a = sched.start, b = sched.end;
  if (sched.inverse) std::swap(a, b);
  return a + (b - a) * static_cast<float>(epoch) /
                 static_cast<float>(sched.total_epochs);
}

std::pair<ViewParams, ViewParams> iou_rejection_sample(
    Rng& rng, const AugConfig& cfg, int src_w, int src_h, float threshold,
    int max_retries, bool* fallback) {
  HVP_CHECK(max_retries >= 1, "iou_rejection_sample: max_retries must be >= 1");
  ViewParams best_a, best_b;
  double best_iou = 2.0;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    ViewParams a = sample_view_params(rng, cfg, src_w, src_h);
    ViewParams b = sample_view_params(rng, cfg, src_w, src_h);
    const double v = iou(a.crop, b.crop);
    if (v <= threshold) {
      if (fallback) *fallback = false;
      return {a, b};
    }
    if (v < best_iou) {
      best_iou = v;
      best_a = a;
      best_b = b;
    }
  }
  if (fallback) *fallback = true;
  return {best_a, best_b};
}

void static_appearance_mode(Rng& jitter_rng, const AugConfig& cfg,
                            std::vector<ViewParams>& views) {
  HVP_CHECK(views.size() >= 2, "static_appearance_mode: need N >= 2 views");
  ViewParams shared;
  sample_jitter_params(jitter_rng, cfg, shared);
  for (ViewParams& vp : views) {
    vp.jitter_applied = shared.jitter_applied;
    vp.brightness = shared.brightness;
    vp.contrast = shared.contrast;
    vp.saturation = shared.saturation;
    vp.hue = shared.hue;
    vp.apply_order = shared.apply_order;
  }
}

}  // namespace hvp
