// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// SelectionLogRecord: one JSON object per line in selection_log.jsonl.
/// Floats are serialized with round-trip precision.

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "hvp/augment.hpp"

namespace hvp {

struct PairRecord {
  int k = 0, l = 0;
  float loss = 0.0f;
  double iou = 0.0, rcd = 0.0, cd = 0.0;
};

struct SelectionLogRecord {
  int64_t step = 0;
  int epoch = 0;
  int64_t sample = 0;  // dataset index
  int src_w = 0, src_h = 0;
  std::vector<PairRecord> pairs;
  int chosen = 0;  // index into pairs
  float chosen_loss = 0.0f;
  std::vector<ViewParams> views;
};

inline nlohmann::json view_params_to_json(const ViewParams& v) {
  return nlohmann::json{
      {"crop_x", v.crop.x},
      {"crop_y", v.crop.y},
      {"crop_w", v.crop.w},
      {"crop_h", v.crop.h},
      {"flipped", v.flipped},
      {"jitter_applied", v.jitter_applied},
      {"brightness", static_cast<double>(v.brightness)},
      {"contrast", static_cast<double>(v.contrast)},
      {"saturation", static_cast<double>(v.saturation)},
      {"hue", static_cast<double>(v.hue)},
      {"grayscale", v.grayscale},
      {"blur", v.blur},
      {"blur_sigma", static_cast<double>(v.blur_sigma)},
      {"apply_order", v.apply_order},
  };
}

inline ViewParams view_params_from_json(const nlohmann::json& j) {
  ViewParams v;
  v.crop.x = j.at("crop_x").get<int>();
  v.crop.y = j.at("crop_y").get<int>();
  v.crop.w = j.at("crop_w").get<int>();
  v.crop.h = j.at("crop_h").get<int>();
  v.flipped = j.at("flipped").get<bool>();
  v.jitter_applied = j.at("jitter_applied").get<bool>();
  v.brightness = j.at("brightness").get<float>();
  v.contrast = j.at("contrast").get<float>();
  v.saturation = j.at("saturation").get<float>();
  v.hue = j.at("hue").get<float>();
  v.grayscale = j.at("grayscale").get<bool>();
  v.blur = j.at("blur").get<bool>();
  v.blur_sigma = j.at("blur_sigma").get<float>();
  auto order = j.at("apply_order").get<std::vector<int>>();
  for (size_t i = 0; i < 4 && i < order.size(); ++i) v.apply_order[i] = order[i];
  return v;
}

inline nlohmann::json record_to_json(const SelectionLogRecord& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const PairRecord& p : r.pairs)
    pairs.push_back({{"k", p.k},
                     {"l", p.l},
                     {"loss", static_cast<double>(p.loss)},
                     {"iou", p.iou},
                     {"rcd", p.rcd},
                     {"cd", p.cd}});
  nlohmann::json views = nlohmann::json::array();
  for (const ViewParams& v : r.views) views.push_back(view_params_to_json(v));
  return nlohmann::json{
      {"step", r.step},        {"epoch", r.epoch},
      {"sample", r.sample},    {"src_w", r.src_w},
      {"src_h", r.src_h},      {"pairs", pairs},
      {"chosen", r.chosen},    {"chosen_loss", static_cast<double>(r.chosen_loss)},
      {"views", views},
  };
}

inline SelectionLogRecord record_from_json(const nlohmann::json& j) {
  SelectionLogRecord r;
  r.step = j.at("step").get<int64_t>();
  r.epoch = j.at("epoch").get<int>();
  r.sample = j.at("sample").get<int64_t>();
  r.src_w = j.at("src_w").get<int>();
  r.src_h = j.at("src_h").get<int>();
  for (const auto& p : j.at("pairs")) {
    PairRecord pr;
    pr.k = p.at("k").get<int>();
    pr.l = p.at("l").get<int>();
    pr.loss = p.at("loss").get<float>();
    pr.iou = p.at("iou").get<double>();
    pr.rcd = p.at("rcd").get<double>();
    pr.cd = p.at("cd").get<double>();
    r.pairs.push_back(pr);
  }
  r.chosen = j.at("chosen").get<int>();
  r.chosen_loss = j.at("chosen_loss").get<float>();
  if (j.contains("views"))
    for (const auto& v : j.at("views"))
      r.views.push_back(view_params_from_json(v));
  return r;
}

}  // namespace hvp
