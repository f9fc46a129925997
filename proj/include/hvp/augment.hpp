// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// View transformation sampling and application.
///
/// Images are planar float CHW in [0,1]. Every sampled parameter is recorded
/// in ViewParams so a view can be replayed exactly and logged for the
/// selection analytics.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hvp/rng.hpp"

namespace hvp {

struct AugConfig {
  float crop_scale_lo = 0.2f, crop_scale_hi = 1.0f;
  float crop_ratio_lo = 3.0f / 4.0f, crop_ratio_hi = 4.0f / 3.0f;
  int out_size = 32;
  float flip_prob = 0.5f;
  float jitter_prob = 0.8f;
  // brightness, contrast, saturation, hue maxima
  float jitter_brightness = 0.4f, jitter_contrast = 0.4f;
  float jitter_saturation = 0.4f, jitter_hue = 0.1f;
  float grayscale_prob = 0.2f;
  float blur_prob = 0.5f;
  float blur_sigma_lo = 0.1f, blur_sigma_hi = 2.0f;

  void validate() const;  // throws ContractViolation
};

struct CropBox {
  int x = 0, y = 0, w = 0, h = 0;  // source-pixel units
};

// jitter sub-op ids used in ViewParams::apply_order
enum JitterOp { kBrightness = 0, kContrast = 1, kSaturation = 2, kHue = 3 };

struct ViewParams {
  CropBox crop;
  bool flipped = false;
  bool jitter_applied = false;
  float brightness = 1.0f, contrast = 1.0f, saturation = 1.0f, hue = 0.0f;
  bool grayscale = false;
  bool blur = false;
  float blur_sigma = 0.0f;
  std::array<int, 4> apply_order = {0, 1, 2, 3};
};

// Random-resized-crop + flip/jitter/grayscale/blur sampling. Crop placement
// follows the standard scheme: area fraction uniform in crop_scale, aspect
// ratio log-uniform in crop_ratio, 10 placement attempts, center fallback.
ViewParams sample_view_params(Rng& rng, const AugConfig& cfg, int src_w,
                              int src_h);

// draw only the color-jitter fields (static-appearance sharing)
void sample_jitter_params(Rng& rng, const AugConfig& cfg, ViewParams& vp);

// crop -> bilinear resize -> flip -> jitter (in apply_order) -> grayscale ->
// gaussian blur (radius ceil(2*sigma)) -> clamp. Pure function.
// geometry_only skips everything after the resize step.
std::vector<float> apply_view(const float* src, int src_w, int src_h,
                              const ViewParams& vp, int out_size,
                              bool geometry_only = false);

double iou(const CropBox& a, const CropBox& b);
double rel_center_distance(const CropBox& a, const CropBox& b, int src_w,
                           int src_h);
double color_distance(const ViewParams& a, const ViewParams& b);

}  // namespace hvp
