// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/augment.hpp"

#include <algorithm>
#include <cmath>

#include "hvp/error.hpp"

namespace hvp {

namespace {

constexpr float kLumaR = 0.299f, kLumaG = 0.587f, kLumaB = 0.114f;

void rgb_to_hsv(float r, float g, float b, float* h, float* s, float* v) {
  const float maxc = std::max({r, g, b});
  const float minc = std::min({r, g, b});
  *v = maxc;
  const float d = maxc - minc;
  *s = maxc <= 0.0f ? 0.0f : d / maxc;
  if (d <= 0.0f) {
    *h = 0.0f;
    return;
  }
  float hh;
  if (maxc == r)
    hh = (g - b) / d;
  else if (maxc == g)
    hh = (b - r) / d + 2.0f;
  else
    hh = (r - g) / d + 4.0f;
  hh /= 6.0f;
  if (hh < 0.0f) hh += 1.0f;
  *h = hh;
}

void hsv_to_rgb(float h, float s, float v, float* r, float* g, float* b) {
  h = h - std::floor(h);
  const float hh = h * 6.0f;
  int sector = static_cast<int>(hh);
  if (sector > 5) sector = 5;
  const float f = hh - static_cast<float>(sector);
  const float p = v * (1.0f - s);
  const float q = v * (1.0f - s * f);
  const float t = v * (1.0f - s * (1.0f - f));
  switch (sector) {
    case 0: *r = v; *g = t; *b = p; break;
    case 1: *r = q; *g = v; *b = p; break;
    case 2: *r = p; *g = v; *b = t; break;
    case 3: *r = p; *g = q; *b = v; break;
    case 4: *r = t; *g = p; *b = v; break;
    default: *r = v; *g = p; *b = q; break;
  }
}

}  // namespace

void AugConfig::validate() const {
  HVP_CHECK(crop_scale_lo > 0.0f && crop_scale_lo <= crop_scale_hi &&
                crop_scale_hi <= 1.0f,
            "aug: crop_scale must satisfy 0 < lo <= hi <= 1");
  HVP_CHECK(crop_ratio_lo > 0.0f && crop_ratio_lo <= crop_ratio_hi,
            "aug: crop_ratio must satisfy 0 < lo <= hi");
  HVP_CHECK(out_size > 0, "aug: out_size must be positive");
  for (float p : {flip_prob, jitter_prob, grayscale_prob, blur_prob})
    HVP_CHECK(p >= 0.0f && p <= 1.0f, "aug: probabilities must lie in [0,1]");
  HVP_CHECK(jitter_brightness >= 0.0f && jitter_contrast >= 0.0f &&
                jitter_saturation >= 0.0f && jitter_hue >= 0.0f,
            "aug: jitter strengths must be non-negative");
  HVP_CHECK(jitter_hue <= 0.5f, "aug: hue maximum must be <= 0.5");
  HVP_CHECK(blur_sigma_lo > 0.0f && blur_sigma_lo <= blur_sigma_hi,
            "aug: blur_sigma range invalid");
}

void sample_jitter_params(Rng& rng, const AugConfig& cfg, ViewParams& vp) {
  vp.jitter_applied = rng.bernoulli(cfg.jitter_prob);
  if (!vp.jitter_applied) {
    vp.brightness = vp.contrast = vp.saturation = 1.0f;
    vp.hue = 0.0f;
    vp.apply_order = {0, 1, 2, 3};
    return;
  }
  vp.brightness = rng.uniform(std::max(0.0f, 1.0f - cfg.jitter_brightness),
                              1.0f + cfg.jitter_brightness);
  vp.contrast = rng.uniform(std::max(0.0f, 1.0f - cfg.jitter_contrast),
                            1.0f + cfg.jitter_contrast);
  vp.saturation = rng.uniform(std::max(0.0f, 1.0f - cfg.jitter_saturation),
                              1.0f + cfg.jitter_saturation);
  vp.hue = rng.uniform(-cfg.jitter_hue, cfg.jitter_hue);
  std::vector<int> order = {0, 1, 2, 3};
  rng.shuffle(order);
  std::copy(order.begin(), order.end(), vp.apply_order.begin());
}

ViewParams sample_view_params(Rng& rng, const AugConfig& cfg, int src_w,
                              int src_h) {
  ViewParams vp;
  const double area = static_cast<double>(src_w) * src_h;
  const double log_lo = std::log(static_cast<double>(cfg.crop_ratio_lo));
  const double log_hi = std::log(static_cast<double>(cfg.crop_ratio_hi));

  bool placed = false;
  for (int attempt = 0; attempt < 10 && !placed; ++attempt) {
    const double target =
        area * rng.uniform(cfg.crop_scale_lo, cfg.crop_scale_hi);
    const double ratio =
        std::exp(log_lo + (log_hi - log_lo) * rng.next_double());
    const int w = static_cast<int>(std::lround(std::sqrt(target * ratio)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / ratio)));
    if (w > 0 && w <= src_w && h > 0 && h <= src_h) {
      vp.crop.w = w;
      vp.crop.h = h;
      vp.crop.x = static_cast<int>(rng.next_below(src_w - w + 1));
      vp.crop.y = static_cast<int>(rng.next_below(src_h - h + 1));
      placed = true;
    }
  }
  if (!placed) {
    // center fallback with the ratio clamped into range
    const double in_ratio = static_cast<double>(src_w) / src_h;
    int w, h;
    if (in_ratio < cfg.crop_ratio_lo) {
      w = src_w;
      h = static_cast<int>(std::lround(w / cfg.crop_ratio_lo));
    } else if (in_ratio > cfg.crop_ratio_hi) {
      h = src_h;
      w = static_cast<int>(std::lround(h * cfg.crop_ratio_hi));
    } else {
      w = src_w;
      h = src_h;
    }
    vp.crop.w = std::max(1, std::min(w, src_w));
    vp.crop.h = std::max(1, std::min(h, src_h));
    vp.crop.x = (src_w - vp.crop.w) / 2;
    vp.crop.y = (src_h - vp.crop.h) / 2;
  }

  vp.flipped = rng.bernoulli(cfg.flip_prob);
  sample_jitter_params(rng, cfg, vp);
  vp.grayscale = rng.bernoulli(cfg.grayscale_prob);
  vp.blur = rng.bernoulli(cfg.blur_prob);
  vp.blur_sigma = vp.blur ? rng.uniform(cfg.blur_sigma_lo, cfg.blur_sigma_hi)
                          : 0.0f;
  return vp;
}

namespace {

// bilinear crop-resize with half-pixel centers, sampling clamped to the crop
void crop_resize(const float* src, int src_w, int src_h, const CropBox& c,
                 int out, float* dst) {
  for (int ch = 0; ch < 3; ++ch) {
    const float* plane = src + static_cast<size_t>(ch) * src_w * src_h;
    float* op = dst + static_cast<size_t>(ch) * out * out;
    for (int oy = 0; oy < out; ++oy) {
      float sy = (oy + 0.5f) * c.h / out - 0.5f;
      if (sy < 0.0f) sy = 0.0f;
      if (sy > c.h - 1.0f) sy = static_cast<float>(c.h - 1);
      const int y0 = static_cast<int>(sy);
      const int y1 = std::min(y0 + 1, c.h - 1);
      const float wy = sy - y0;
      for (int ox = 0; ox < out; ++ox) {
        float sx = (ox + 0.5f) * c.w / out - 0.5f;
        if (sx < 0.0f) sx = 0.0f;
        if (sx > c.w - 1.0f) sx = static_cast<float>(c.w - 1);
        const int x0 = static_cast<int>(sx);
        const int x1 = std::min(x0 + 1, c.w - 1);
        const float wx = sx - x0;
        const float v00 = plane[(c.y + y0) * src_w + c.x + x0];
        const float v01 = plane[(c.y + y0) * src_w + c.x + x1];
        const float v10 = plane[(c.y + y1) * src_w + c.x + x0];
        const float v11 = plane[(c.y + y1) * src_w + c.x + x1];
        const float top = v00 + wx * (v01 - v00);
        const float bot = v10 + wx * (v11 - v10);
        op[oy * out + ox] = top + wy * (bot - top);
      }
    }
  }
}

float mean_luma(const float* img, int n) {
  float acc = 0.0f;
  for (int p = 0; p < n; ++p)
    acc += kLumaR * img[p] + kLumaG * img[n + p] + kLumaB * img[2 * n + p];
  return acc / static_cast<float>(n);
}

void gaussian_blur(float* img, int size, float sigma) {
  const int radius = static_cast<int>(std::ceil(2.0f * sigma));
  if (radius < 1) return;
  std::vector<float> k(radius + 1);
  float sum = 0.0f;
  for (int i = 0; i <= radius; ++i) {
    k[i] = std::exp(-0.5f * i * i / (sigma * sigma));
    sum += i == 0 ? k[i] : 2.0f * k[i];
  }
  for (float& v : k) v /= sum;

  std::vector<float> tmp(static_cast<size_t>(size) * size);
  for (int ch = 0; ch < 3; ++ch) {
    float* plane = img + static_cast<size_t>(ch) * size * size;
    // horizontal
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        float acc = k[0] * plane[y * size + x];
        for (int i = 1; i <= radius; ++i) {
          const int xl = std::max(0, x - i);
          const int xr = std::min(size - 1, x + i);
          acc += k[i] * (plane[y * size + xl] + plane[y * size + xr]);
        }
        tmp[y * size + x] = acc;
      }
    // vertical
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        float acc = k[0] * tmp[y * size + x];
        for (int i = 1; i <= radius; ++i) {
          const int yu = std::max(0, y - i);
          const int yd = std::min(size - 1, y + i);
          acc += k[i] * (tmp[yu * size + x] + tmp[yd * size + x]);
        }
        plane[y * size + x] = acc;
      }
  }
}

}  // namespace

std::vector<float> apply_view(const float* src, int src_w, int src_h,
                              const ViewParams& vp, int out_size,
                              bool geometry_only) {
  const CropBox& c = vp.crop;
  HVP_CHECK(c.w > 0 && c.h > 0 && c.x >= 0 && c.y >= 0 &&
                c.x + c.w <= src_w && c.y + c.h <= src_h,
            "apply_view: crop box outside source image");

  const int n = out_size * out_size;
  std::vector<float> img(3 * static_cast<size_t>(n));
  crop_resize(src, src_w, src_h, c, out_size, img.data());
  if (geometry_only) return img;

  if (vp.flipped) {
    for (int ch = 0; ch < 3; ++ch) {
      float* plane = img.data() + static_cast<size_t>(ch) * n;
      for (int y = 0; y < out_size; ++y)
        for (int x = 0; x < out_size / 2; ++x)
          std::swap(plane[y * out_size + x],
                    plane[y * out_size + out_size - 1 - x]);
    }
  }

  if (vp.jitter_applied) {
    for (int op : vp.apply_order) {
      switch (op) {
        case kBrightness:
          for (float& v : img) v *= vp.brightness;
          break;
        case kContrast: {
          const float mean = mean_luma(img.data(), n);
          for (float& v : img) v = (v - mean) * vp.contrast + mean;
          break;
        }
        case kSaturation:
          for (int p = 0; p < n; ++p) {
            const float l = kLumaR * img[p] + kLumaG * img[n + p] +
                            kLumaB * img[2 * n + p];
            img[p] = (img[p] - l) * vp.saturation + l;
            img[n + p] = (img[n + p] - l) * vp.saturation + l;
            img[2 * n + p] = (img[2 * n + p] - l) * vp.saturation + l;
          }
          break;
        case kHue:
          for (int p = 0; p < n; ++p) {
            float h, s, v;
            rgb_to_hsv(img[p], img[n + p], img[2 * n + p], &h, &s, &v);
            hsv_to_rgb(h + vp.hue, s, v, &img[p], &img[n + p], &img[2 * n + p]);
          }
          break;
        default:
          break;
      }
    }
  }

  if (vp.grayscale) {
    for (int p = 0; p < n; ++p) {
      const float l =
          kLumaR * img[p] + kLumaG * img[n + p] + kLumaB * img[2 * n + p];
      img[p] = img[n + p] = img[2 * n + p] = l;
    }
  }

  if (vp.blur) gaussian_blur(img.data(), out_size, vp.blur_sigma);

  for (float& v : img) v = std::min(1.0f, std::max(0.0f, v));
  return img;
}

double iou(const CropBox& a, const CropBox& b) {
  HVP_CHECK(a.w > 0 && a.h > 0 && b.w > 0 && b.h > 0,
            "iou: zero-area crop box");
  const double ix0 = std::max(a.x, b.x);
  const double iy0 = std::max(a.y, b.y);
  const double ix1 = std::min(a.x + a.w, b.x + b.w);
  const double iy1 = std::min(a.y + a.h, b.y + b.h);
  const double iw = std::max(0.0, ix1 - ix0);
  const double ih = std::max(0.0, iy1 - iy0);
  const double inter = iw * ih;
  const double uni = static_cast<double>(a.w) * a.h +
                     static_cast<double>(b.w) * b.h - inter;
  return inter / uni;
}

double rel_center_distance(const CropBox& a, const CropBox& b, int src_w,
                           int src_h) {
  const double acx = a.x + a.w / 2.0, acy = a.y + a.h / 2.0;
  const double bcx = b.x + b.w / 2.0, bcy = b.y + b.h / 2.0;
  const double dist = std::hypot(acx - bcx, acy - bcy);
  const double diag = std::hypot(static_cast<double>(src_w),
                                 static_cast<double>(src_h));
  return dist / diag;
}

double color_distance(const ViewParams& a, const ViewParams& b) {
  const double db = static_cast<double>(a.brightness) - b.brightness;
  const double dc = static_cast<double>(a.contrast) - b.contrast;
  const double ds = static_cast<double>(a.saturation) - b.saturation;
  const double dh = static_cast<double>(a.hue) - b.hue;
  return std::sqrt(db * db + dc * dc + ds * ds + dh * dh);
}

}  // namespace hvp
