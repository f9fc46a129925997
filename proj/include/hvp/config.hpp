// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "hvp/augment.hpp"
#include "hvp/dataset.hpp"
#include "hvp/model.hpp"
#include "hvp/objectives.hpp"
#include "hvp/selection.hpp"

namespace hvp {

// Invalid or unknown configuration content (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  Objective objective = Objective::kSimSiam;
  SelectionMode mode = SelectionMode::kAdversarial;
  int n_views = 4;      // config key "N"
  int batch_size = 128; // config key "M"
  int epochs = 30;
  float base_lr = 0.05f;
  float min_lr = 0.0f;
  float momentum = 0.9f;
  float weight_decay = 1e-4f;
  int warmup_epochs = 0;
  int n_step = 1;
  int pair_cap = 128;
  float tau = 0.1f;
  SimclrDenominator simclr_denominator = SimclrDenominator::kCrossViewExclusive;
  uint64_t seed = 1;
  bool static_appearance = false;
  bool select_before_appearance = false;
  bool fix_pred_lr = true;
  ModelWidths widths;
  int checkpoint_every = 1;  // epochs
  AugConfig aug;
  std::optional<IoUSchedule> iou_policy;

  void validate() const;  // throws ConfigError
};

struct DataConfig {
  enum class Kind { kSynth, kCifar10 };
  Kind kind = Kind::kSynth;
  std::string path;       // cifar10: .bin file or directory of data_batch*.bin
  size_t n = 5000;        // synth
  int num_classes = 10;   // synth
  uint64_t seed = 7;      // synth
  size_t limit = 0;       // optional subset cap after load (0 = all)
};

struct RunConfig {
  TrainConfig train;
  DataConfig data;
  nlohmann::json snapshot;  // canonical form, defaults filled
  uint64_t config_hash = 0; // over the canonical snapshot
};

// Strict parsing: unknown keys are rejected with the offending key named.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig parse_run_config_file(const std::string& path);

nlohmann::json run_config_to_json(const TrainConfig& train,
                                  const DataConfig& data);

uint64_t fnv1a64(std::string_view s);

Dataset load_dataset(const DataConfig& data);

const char* objective_name(Objective o);
const char* mode_name(SelectionMode m);

}  // namespace hvp
