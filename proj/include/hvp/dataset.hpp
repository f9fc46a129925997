// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hvp {

// 32x32x3 images, planar channel layout (R plane, G plane, B plane),
// values in [0,1].
inline constexpr int kImageSize = 32;
inline constexpr int kImagePixels = kImageSize * kImageSize;
inline constexpr int kImageFloats = 3 * kImagePixels;

struct Dataset {
  std::vector<float> pixels;  // n * kImageFloats
  std::vector<int> labels;
  int num_classes = 10;

  size_t size() const { return labels.size(); }
  const float* image(size_t i) const { return pixels.data() + i * kImageFloats; }
  float* image(size_t i) { return pixels.data() + i * kImageFloats; }
};

// CIFAR-10 binary records: 1 label byte + 1024 R + 1024 G + 1024 B bytes.
Dataset load_cifar10_bin(const std::string& path);
void save_cifar10_bin(const Dataset& ds, const std::string& path);

// Procedural labeled images: class-determined shape and hue on a smooth
// two-color gradient background, with seeded position/size/color jitter.
Dataset synth_dataset(uint64_t seed, size_t n, int num_classes);

struct BatchPlan {
  std::vector<size_t> order;  // permutation of [0, dataset size)
  size_t batch_size = 0;

  size_t num_batches() const { return order.size() / batch_size; }
  // indices of batch b (drop-last)
  std::vector<size_t> batch(size_t b) const;
};

BatchPlan batches(size_t dataset_size, size_t batch_size, uint64_t seed,
                  int64_t epoch);

}  // namespace hvp
