// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "hvp/error.hpp"
#include "hvp/logrecord.hpp"

namespace hvp {

using nlohmann::json;

namespace {

struct BucketAccum {
  int64_t records = 0;
  int64_t lowest_hits = 0;
  double sel_iou_sum = 0.0;
  double all_iou_sum = 0.0;
  int64_t all_pairs = 0;
  double loss_sum = 0.0;
};

int hist_bin(double iou) {
  int b = static_cast<int>(iou * kIoUHistogramBins);
  if (b < 0) b = 0;
  if (b >= kIoUHistogramBins) b = kIoUHistogramBins - 1;
  return b;
}

}  // namespace

SelectionStats compute_stats(std::istream& jsonl, int bucket_width) {
  HVP_CHECK(bucket_width >= 1, "compute_stats: bucket width must be >= 1");
  std::map<int, BucketAccum> buckets;
  std::array<int64_t, kIoUHistogramBins> hist_sel{};
  std::array<int64_t, kIoUHistogramBins> hist_all{};
  size_t records = 0, skipped = 0;

  std::string line;
  while (std::getline(jsonl, line)) {
    if (line.empty()) continue;
    SelectionLogRecord rec;
    try {
      rec = record_from_json(json::parse(line));
      if (rec.pairs.empty() ||
          rec.chosen < 0 || rec.chosen >= static_cast<int>(rec.pairs.size()))
        throw FormatError("chosen pair out of range");
    } catch (const std::exception&) {
      ++skipped;
      continue;
    }
    ++records;
    BucketAccum& acc = buckets[rec.epoch / bucket_width];
    ++acc.records;
    double min_iou = 2.0;
    for (const PairRecord& p : rec.pairs) {
      min_iou = std::min(min_iou, p.iou);
      acc.all_iou_sum += p.iou;
      ++acc.all_pairs;
      ++hist_all[hist_bin(p.iou)];
    }
    const double chosen_iou = rec.pairs[rec.chosen].iou;
    acc.sel_iou_sum += chosen_iou;
    acc.loss_sum += rec.chosen_loss;
    if (chosen_iou <= min_iou) ++acc.lowest_hits;
    ++hist_sel[hist_bin(chosen_iou)];
  }

  const size_t total = records + skipped;
  if (total == 0) throw FormatError("selection log contains no records");
  if (skipped * 100 > total)
    throw FormatError("more than 1% of selection log lines are malformed (" +
                      std::to_string(skipped) + "/" + std::to_string(total) +
                      ")");

  SelectionStats s;
  s.bucket_width = bucket_width;
  s.records = records;
  s.skipped = skipped;
  for (const auto& [b, acc] : buckets) {
    s.bucket_lo.push_back(b * bucket_width);
    s.bucket_hi.push_back(b * bucket_width + bucket_width - 1);
    s.frac_lowest_iou_selected.push_back(
        static_cast<double>(acc.lowest_hits) / acc.records);
    s.mean_iou_selected.push_back(acc.sel_iou_sum / acc.records);
    s.mean_iou_random.push_back(acc.all_iou_sum / acc.all_pairs);
    s.mean_loss.push_back(acc.loss_sum / acc.records);
  }
  int64_t sel_total = 0, all_total = 0;
  for (int64_t v : hist_sel) sel_total += v;
  for (int64_t v : hist_all) all_total += v;
  for (int b = 0; b < kIoUHistogramBins; ++b) {
    s.iou_histogram_selected[b] =
        static_cast<double>(hist_sel[b]) / static_cast<double>(sel_total);
    s.iou_histogram_random[b] =
        static_cast<double>(hist_all[b]) / static_cast<double>(all_total);
  }
  return s;
}

SelectionStats compute_stats_files(const std::vector<std::string>& paths,
                                   int bucket_width) {
  // concatenate the streams (multi-seed logs aggregate into one run)
  std::string merged;
  for (const std::string& p : paths) {
    std::ifstream f(p);
    if (!f) throw FormatError("cannot open selection log: " + p);
    merged.append(std::istreambuf_iterator<char>(f),
                  std::istreambuf_iterator<char>());
    if (!merged.empty() && merged.back() != '\n') merged.push_back('\n');
  }
  std::istringstream ss(merged);
  return compute_stats(ss, bucket_width);
}

CompareReport compare_runs(const SelectionStats& hvp,
                           const SelectionStats& baseline) {
  HVP_CHECK(hvp.buckets() == baseline.buckets() &&
                hvp.bucket_lo == baseline.bucket_lo,
            "compare_runs: epoch buckets do not match");
  CompareReport rep;
  size_t elevated = 0;
  for (size_t i = 0; i < hvp.buckets(); ++i) {
    CompareRow row;
    row.bucket_lo = hvp.bucket_lo[i];
    row.bucket_hi = hvp.bucket_hi[i];
    row.d_mean_loss = hvp.mean_loss[i] - baseline.mean_loss[i];
    row.d_mean_iou = hvp.mean_iou_selected[i] - baseline.mean_iou_selected[i];
    row.d_frac = hvp.frac_lowest_iou_selected[i] -
                 baseline.frac_lowest_iou_selected[i];
    if (row.d_mean_loss > 0.0) ++elevated;
    rep.rows.push_back(row);
  }
  rep.loss_elevated =
      hvp.buckets() == 0 ? 0.0
                         : static_cast<double>(elevated) / hvp.buckets();
  return rep;
}

void write_stats_csv(const SelectionStats& s, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot write stats csv: " + path);
  f.precision(10);
  f << "bucket_lo,bucket_hi,frac_lowest_iou_selected,mean_iou_selected,"
       "mean_iou_random,mean_loss\n";
  for (size_t i = 0; i < s.buckets(); ++i)
    f << s.bucket_lo[i] << ',' << s.bucket_hi[i] << ','
      << s.frac_lowest_iou_selected[i] << ',' << s.mean_iou_selected[i] << ','
      << s.mean_iou_random[i] << ',' << s.mean_loss[i] << '\n';
}

void write_histogram_csv(const SelectionStats& s, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot write histogram csv: " + path);
  f.precision(10);
  f << "bin_lo,bin_hi,mass_selected,mass_random\n";
  for (int b = 0; b < kIoUHistogramBins; ++b)
    f << static_cast<double>(b) / kIoUHistogramBins << ','
      << static_cast<double>(b + 1) / kIoUHistogramBins << ','
      << s.iou_histogram_selected[b] << ',' << s.iou_histogram_random[b]
      << '\n';
}

void write_compare_csv(const CompareReport& r, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot write compare csv: " + path);
  f.precision(10);
  f << "bucket_lo,bucket_hi,d_mean_loss,d_mean_iou,d_frac\n";
  for (const CompareRow& row : r.rows)
    f << row.bucket_lo << ',' << row.bucket_hi << ',' << row.d_mean_loss << ','
      << row.d_mean_iou << ',' << row.d_frac << '\n';
}

}  // namespace hvp
