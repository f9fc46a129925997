// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// Selection-pattern statistics from SelectionLogRecord streams:
/// lowest-IoU selection fraction, IoU distribution shift, per-epoch curves
/// and loss-elevation comparison between runs.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hvp {

inline constexpr int kIoUHistogramBins = 20;

struct SelectionStats {
  int bucket_width = 1;  // epochs per bucket
  std::vector<int> bucket_lo, bucket_hi;  // inclusive epoch ranges
  std::vector<double> frac_lowest_iou_selected;
  std::vector<double> mean_iou_selected;
  std::vector<double> mean_iou_random;  // over all candidate pairs
  std::vector<double> mean_loss;        // chosen losses
  std::array<double, kIoUHistogramBins> iou_histogram_selected{};
  std::array<double, kIoUHistogramBins> iou_histogram_random{};
  size_t records = 0;
  size_t skipped = 0;

  size_t buckets() const { return bucket_lo.size(); }
};

// Streams JSONL records; malformed lines are skipped and counted, more than
// 1% skipped raises FormatError. bucket_width groups epochs.
SelectionStats compute_stats(std::istream& jsonl, int bucket_width = 1);
SelectionStats compute_stats_files(const std::vector<std::string>& paths,
                                   int bucket_width = 1);

struct CompareRow {
  int bucket_lo = 0, bucket_hi = 0;
  double d_mean_loss = 0.0;  // hvp - baseline
  double d_mean_iou = 0.0;
  double d_frac = 0.0;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  double loss_elevated = 0.0;  // fraction of buckets with hvp loss > baseline
};

// Requires matching epoch buckets.
CompareReport compare_runs(const SelectionStats& hvp,
                           const SelectionStats& baseline);

void write_stats_csv(const SelectionStats& s, const std::string& path);
void write_histogram_csv(const SelectionStats& s, const std::string& path);
void write_compare_csv(const CompareReport& r, const std::string& path);

}  // namespace hvp
