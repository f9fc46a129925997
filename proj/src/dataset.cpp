// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "hvp/error.hpp"
#include "hvp/rng.hpp"

namespace hvp {

namespace {
constexpr size_t kRecordBytes = 1 + 3 * kImagePixels;  // 3073
}

Dataset load_cifar10_bin(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open dataset file: " + path);
  f.seekg(0, std::ios::end);
  const auto bytes = static_cast<size_t>(f.tellg());
  f.seekg(0);
  if (bytes == 0 || bytes % kRecordBytes != 0)
    throw FormatError("dataset file length " + std::to_string(bytes) +
                      " is not a multiple of 3073: " + path);
  const size_t n = bytes / kRecordBytes;

  Dataset ds;
  ds.labels.resize(n);
  ds.pixels.resize(n * kImageFloats);
  std::vector<unsigned char> rec(kRecordBytes);
  for (size_t i = 0; i < n; ++i) {
    f.read(reinterpret_cast<char*>(rec.data()), kRecordBytes);
    if (!f) throw FormatError("truncated dataset record in " + path);
    if (rec[0] > 9)
      throw FormatError("label byte " + std::to_string(rec[0]) +
                        " out of range in " + path);
    ds.labels[i] = rec[0];
    float* img = ds.image(i);
    for (size_t p = 0; p < 3 * kImagePixels; ++p)
      img[p] = static_cast<float>(rec[1 + p]) / 255.0f;
  }
  return ds;
}

void save_cifar10_bin(const Dataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot write dataset file: " + path);
  std::vector<unsigned char> rec(kRecordBytes);
  for (size_t i = 0; i < ds.size(); ++i) {
    rec[0] = static_cast<unsigned char>(ds.labels[i]);
    const float* img = ds.image(i);
    for (size_t p = 0; p < 3 * kImagePixels; ++p) {
      float v = img[p] * 255.0f + 0.5f;
      if (v < 0.0f) v = 0.0f;
      if (v > 255.0f) v = 255.0f;
      rec[1 + p] = static_cast<unsigned char>(v);
    }
    f.write(reinterpret_cast<const char*>(rec.data()), kRecordBytes);
  }
}

namespace {

void hsv_to_rgb(float h, float s, float v, float* r, float* g, float* b) {
  h = h - std::floor(h);
  const float hh = h * 6.0f;
  const int sector = static_cast<int>(hh) % 6;
  const float f = hh - std::floor(hh);
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

Dataset synth_dataset(uint64_t seed, size_t n, int num_classes) {
  HVP_CHECK(n > 0, "synth_dataset: n must be positive");
  HVP_CHECK(num_classes >= 2, "synth_dataset: need at least 2 classes");

  Dataset ds;
  ds.num_classes = num_classes;
  ds.labels.resize(n);
  ds.pixels.assign(n * kImageFloats, 0.0f);

  const int S = kImageSize;
  for (size_t i = 0; i < n; ++i) {
    Rng rng = Rng::keyed(seed, rngtag::kSynth, i);
    const int cls = static_cast<int>(rng.next_below(num_classes));
    ds.labels[i] = cls;
    float* img = ds.image(i);

    // background: smooth diagonal gradient between two random colors
    float c0[3], c1[3];
    hsv_to_rgb(rng.next_float(), rng.uniform(0.2f, 0.6f),
               rng.uniform(0.25f, 0.6f), &c0[0], &c0[1], &c0[2]);
    hsv_to_rgb(rng.next_float(), rng.uniform(0.2f, 0.6f),
               rng.uniform(0.25f, 0.6f), &c1[0], &c1[1], &c1[2]);
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        const float t = static_cast<float>(x + y) / (2.0f * (S - 1));
        for (int ch = 0; ch < 3; ++ch)
          img[ch * kImagePixels + y * S + x] = c0[ch] + t * (c1[ch] - c0[ch]);
      }

    // foreground: class hue, class shape, jittered placement
    const float hue = (static_cast<float>(cls) + rng.uniform(-0.18f, 0.18f)) /
                      static_cast<float>(num_classes);
    float fr, fg, fb;
    hsv_to_rgb(hue, rng.uniform(0.75f, 1.0f), rng.uniform(0.8f, 1.0f), &fr,
               &fg, &fb);
    const float fcol[3] = {fr, fg, fb};
    const float cx = rng.uniform(8.0f, S - 8.0f);
    const float cy = rng.uniform(8.0f, S - 8.0f);
    const float rad = rng.uniform(5.0f, 9.0f);
    const int shape = cls % 4;

    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        const float dx = x - cx, dy = y - cy;
        bool inside = false;
        switch (shape) {
          case 0: inside = dx * dx + dy * dy <= rad * rad; break;
          case 1: inside = std::fabs(dx) <= rad * 0.8f && std::fabs(dy) <= rad * 0.8f; break;
          case 2: inside = std::fabs(dx) + std::fabs(dy) <= rad * 1.1f; break;
          default:
            inside = (std::fabs(dx) <= rad * 0.35f && std::fabs(dy) <= rad) ||
                     (std::fabs(dy) <= rad * 0.35f && std::fabs(dx) <= rad);
        }
        if (inside)
          for (int ch = 0; ch < 3; ++ch)
            img[ch * kImagePixels + y * S + x] = fcol[ch];
      }

    // light pixel noise so identical draws remain distinguishable
    for (int p = 0; p < kImagePixels; ++p) {
      const float noise = rng.uniform(-0.03f, 0.03f);
      for (int ch = 0; ch < 3; ++ch) {
        float& v = img[ch * kImagePixels + p];
        v += noise;
        if (v < 0.0f) v = 0.0f;
        if (v > 1.0f) v = 1.0f;
      }
    }
  }
  return ds;
}

std::vector<size_t> BatchPlan::batch(size_t b) const {
  HVP_CHECK(b < num_batches(), "batch index out of range");
  return {order.begin() + b * batch_size, order.begin() + (b + 1) * batch_size};
}

BatchPlan batches(size_t dataset_size, size_t batch_size, uint64_t seed,
                  int64_t epoch) {
  HVP_CHECK(batch_size >= 1 && batch_size <= dataset_size,
            "batches: batch size exceeds dataset length");
  BatchPlan plan;
  plan.batch_size = batch_size;
  plan.order.resize(dataset_size);
  std::iota(plan.order.begin(), plan.order.end(), size_t{0});
  Rng rng = Rng::keyed(seed, rngtag::kPermutation, static_cast<uint64_t>(epoch),
                       dataset_size);
  rng.shuffle(plan.order);
  return plan;
}

}  // namespace hvp
