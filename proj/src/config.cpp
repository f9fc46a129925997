// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace hvp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown config key \"" + scope + it.key() + "\"");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key \"" + key + "\" has the wrong type");
  }
}

std::pair<float, float> get_range(const json& j, const std::string& key,
                                  float lo, float hi) {
  if (!j.contains(key)) return {lo, hi};
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2)
    throw ConfigError("config key \"" + key + "\" must be a [lo, hi] pair");
  return {v[0].get<float>(), v[1].get<float>()};
}

AugConfig parse_aug(const json& j) {
  reject_unknown_keys(j,
                      {"crop_scale", "crop_ratio", "out_size", "flip_prob",
                       "jitter_prob", "jitter_strengths", "grayscale_prob",
                       "blur_prob", "blur_sigma"},
                      "aug.");
  AugConfig a;
  std::tie(a.crop_scale_lo, a.crop_scale_hi) =
      get_range(j, "crop_scale", a.crop_scale_lo, a.crop_scale_hi);
  std::tie(a.crop_ratio_lo, a.crop_ratio_hi) =
      get_range(j, "crop_ratio", a.crop_ratio_lo, a.crop_ratio_hi);
  a.out_size = get_or(j, "out_size", a.out_size);
  a.flip_prob = get_or(j, "flip_prob", a.flip_prob);
  a.jitter_prob = get_or(j, "jitter_prob", a.jitter_prob);
  if (j.contains("jitter_strengths")) {
    const json& v = j.at("jitter_strengths");
    if (!v.is_array() || v.size() != 4)
      throw ConfigError(
          "aug.jitter_strengths must be [brightness, contrast, saturation, hue]");
    a.jitter_brightness = v[0].get<float>();
    a.jitter_contrast = v[1].get<float>();
    a.jitter_saturation = v[2].get<float>();
    a.jitter_hue = v[3].get<float>();
  }
  a.grayscale_prob = get_or(j, "grayscale_prob", a.grayscale_prob);
  a.blur_prob = get_or(j, "blur_prob", a.blur_prob);
  std::tie(a.blur_sigma_lo, a.blur_sigma_hi) =
      get_range(j, "blur_sigma", a.blur_sigma_lo, a.blur_sigma_hi);
  return a;
}

IoUSchedule parse_iou_policy(const json& j, int epochs) {
  reject_unknown_keys(
      j, {"start", "end", "inverse", "alternate", "max_retries"},
      "iou_policy.");
  IoUSchedule s;
  s.start = get_or(j, "start", s.start);
  s.end = get_or(j, "end", s.end);
  s.inverse = get_or(j, "inverse", s.inverse);
  s.alternate = get_or(j, "alternate", s.alternate);
  s.max_retries = get_or(j, "max_retries", s.max_retries);
  s.total_epochs = epochs;
  return s;
}

DataConfig parse_data(const json& j) {
  reject_unknown_keys(j, {"kind", "path", "n", "num_classes", "seed", "limit"},
                      "data.");
  DataConfig d;
  const std::string kind = get_or<std::string>(j, "kind", "synth");
  if (kind == "synth")
    d.kind = DataConfig::Kind::kSynth;
  else if (kind == "cifar10")
    d.kind = DataConfig::Kind::kCifar10;
  else
    throw ConfigError("data.kind must be \"synth\" or \"cifar10\"");
  d.path = get_or<std::string>(j, "path", "");
  d.n = get_or<size_t>(j, "n", d.n);
  d.num_classes = get_or(j, "num_classes", d.num_classes);
  d.seed = get_or<uint64_t>(j, "seed", d.seed);
  d.limit = get_or<size_t>(j, "limit", d.limit);
  if (d.kind == DataConfig::Kind::kCifar10 && d.path.empty())
    throw ConfigError("data.path is required for data.kind = \"cifar10\"");
  return d;
}

}  // namespace

const char* objective_name(Objective o) {
  return o == Objective::kSimSiam ? "simsiam" : "simclr";
}

const char* mode_name(SelectionMode m) {
  switch (m) {
    case SelectionMode::kAdversarial: return "adversarial";
    case SelectionMode::kCooperative: return "cooperative";
    default: return "random";
  }
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (n_views < 2) fail("N must be >= 2");
  if (batch_size < 1) fail("M must be >= 1");
  if (objective == Objective::kSimCLR && batch_size < 2)
    fail("simclr needs M >= 2");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(base_lr > 0.0f)) fail("base_lr must be positive");
  if (min_lr < 0.0f || min_lr > base_lr) fail("min_lr must lie in [0, base_lr]");
  if (momentum < 0.0f || momentum >= 1.0f) fail("momentum must lie in [0,1)");
  if (weight_decay < 0.0f) fail("weight_decay must be non-negative");
  if (warmup_epochs < 0 || warmup_epochs >= epochs)
    fail("warmup_epochs must lie in [0, epochs)");
  if (n_step < 1) fail("n_step must be >= 1");
  if (pair_cap < 1) fail("pair_cap must be >= 1");
  if (!(tau > 0.0f)) fail("tau must be positive");
  if (widths.d_z < 1 || widths.d_pred < 1) fail("widths must be positive");
  if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  if (iou_policy && n_views != 2)
    fail("iou_policy runs the two-view baseline pipeline; set N = 2");
  try {
    aug.validate();
  } catch (const ContractViolation& e) {
    fail(e.what());
  }
}

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(
      j,
      {"objective", "mode", "N", "M", "epochs", "base_lr", "min_lr",
       "momentum", "weight_decay", "warmup_epochs", "n_step", "pair_cap",
       "tau", "simclr_denominator", "seed", "static_appearance",
       "select_before_appearance", "fix_pred_lr", "d_z", "d_pred",
       "checkpoint_every", "aug", "iou_policy", "data"},
      "");

  RunConfig rc;
  TrainConfig& t = rc.train;

  const std::string obj = get_or<std::string>(j, "objective", "simsiam");
  if (obj == "simsiam")
    t.objective = Objective::kSimSiam;
  else if (obj == "simclr")
    t.objective = Objective::kSimCLR;
  else
    throw ConfigError("objective must be \"simsiam\" or \"simclr\"");

  const std::string mode = get_or<std::string>(j, "mode", "adversarial");
  if (mode == "adversarial")
    t.mode = SelectionMode::kAdversarial;
  else if (mode == "cooperative")
    t.mode = SelectionMode::kCooperative;
  else if (mode == "random")
    t.mode = SelectionMode::kRandom;
  else
    throw ConfigError("mode must be adversarial, cooperative or random");

  t.n_views = get_or(j, "N", t.n_views);
  t.batch_size = get_or(j, "M", t.batch_size);
  t.epochs = get_or(j, "epochs", t.epochs);
  t.base_lr = get_or(j, "base_lr", t.base_lr);
  t.min_lr = get_or(j, "min_lr", t.min_lr);
  t.momentum = get_or(j, "momentum", t.momentum);
  t.weight_decay = get_or(j, "weight_decay", t.weight_decay);
  t.warmup_epochs = get_or(j, "warmup_epochs", t.warmup_epochs);
  t.n_step = get_or(j, "n_step", t.n_step);
  t.pair_cap = get_or(j, "pair_cap", t.pair_cap);
  t.tau = get_or(j, "tau", t.tau);

  const std::string den =
      get_or<std::string>(j, "simclr_denominator", "cross_view_exclusive");
  if (den == "cross_view_exclusive")
    t.simclr_denominator = SimclrDenominator::kCrossViewExclusive;
  else if (den == "ntxent")
    t.simclr_denominator = SimclrDenominator::kNtXent;
  else
    throw ConfigError(
        "simclr_denominator must be \"cross_view_exclusive\" or \"ntxent\"");

  t.seed = get_or<uint64_t>(j, "seed", t.seed);
  t.static_appearance = get_or(j, "static_appearance", t.static_appearance);
  t.select_before_appearance =
      get_or(j, "select_before_appearance", t.select_before_appearance);
  t.fix_pred_lr = get_or(j, "fix_pred_lr", t.fix_pred_lr);
  t.widths.d_z = get_or(j, "d_z", t.widths.d_z);
  t.widths.d_pred = get_or(j, "d_pred", t.widths.d_pred);
  t.checkpoint_every = get_or(j, "checkpoint_every", t.checkpoint_every);
  if (j.contains("aug")) t.aug = parse_aug(j.at("aug"));
  if (j.contains("iou_policy") && !j.at("iou_policy").is_null())
    t.iou_policy = parse_iou_policy(j.at("iou_policy"), t.epochs);
  if (j.contains("data")) rc.data = parse_data(j.at("data"));

  t.validate();
  rc.snapshot = run_config_to_json(t, rc.data);
  rc.config_hash = fnv1a64(rc.snapshot.dump());
  return rc;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json run_config_to_json(const TrainConfig& t, const DataConfig& d) {
  json j;
  j["objective"] = objective_name(t.objective);
  j["mode"] = mode_name(t.mode);
  j["N"] = t.n_views;
  j["M"] = t.batch_size;
  j["epochs"] = t.epochs;
  j["base_lr"] = t.base_lr;
  j["min_lr"] = t.min_lr;
  j["momentum"] = t.momentum;
  j["weight_decay"] = t.weight_decay;
  j["warmup_epochs"] = t.warmup_epochs;
  j["n_step"] = t.n_step;
  j["pair_cap"] = t.pair_cap;
  j["tau"] = t.tau;
  j["simclr_denominator"] =
      t.simclr_denominator == SimclrDenominator::kCrossViewExclusive
          ? "cross_view_exclusive"
          : "ntxent";
  j["seed"] = t.seed;
  j["static_appearance"] = t.static_appearance;
  j["select_before_appearance"] = t.select_before_appearance;
  j["fix_pred_lr"] = t.fix_pred_lr;
  j["d_z"] = t.widths.d_z;
  j["d_pred"] = t.widths.d_pred;
  j["checkpoint_every"] = t.checkpoint_every;
  j["aug"] = {
      {"crop_scale", {t.aug.crop_scale_lo, t.aug.crop_scale_hi}},
      {"crop_ratio", {t.aug.crop_ratio_lo, t.aug.crop_ratio_hi}},
      {"out_size", t.aug.out_size},
      {"flip_prob", t.aug.flip_prob},
      {"jitter_prob", t.aug.jitter_prob},
      {"jitter_strengths",
       {t.aug.jitter_brightness, t.aug.jitter_contrast, t.aug.jitter_saturation,
        t.aug.jitter_hue}},
      {"grayscale_prob", t.aug.grayscale_prob},
      {"blur_prob", t.aug.blur_prob},
      {"blur_sigma", {t.aug.blur_sigma_lo, t.aug.blur_sigma_hi}},
  };
  if (t.iou_policy) {
    j["iou_policy"] = {{"start", t.iou_policy->start},
                       {"end", t.iou_policy->end},
                       {"inverse", t.iou_policy->inverse},
                       {"alternate", t.iou_policy->alternate},
                       {"max_retries", t.iou_policy->max_retries}};
  }
  json dj;
  dj["kind"] = d.kind == DataConfig::Kind::kSynth ? "synth" : "cifar10";
  dj["path"] = d.path;
  dj["n"] = d.n;
  dj["num_classes"] = d.num_classes;
  dj["seed"] = d.seed;
  dj["limit"] = d.limit;
  j["data"] = dj;
  return j;
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Dataset load_dataset(const DataConfig& d) {
  Dataset ds;
  if (d.kind == DataConfig::Kind::kSynth) {
    ds = synth_dataset(d.seed, d.n, d.num_classes);
  } else {
    fs::path p(d.path);
    if (fs::is_directory(p)) {
      Dataset all;
      all.num_classes = 10;
      bool found = false;
      for (int b = 1; b <= 5; ++b) {
        fs::path f = p / ("data_batch_" + std::to_string(b) + ".bin");
        if (!fs::exists(f)) continue;
        Dataset part = load_cifar10_bin(f.string());
        all.pixels.insert(all.pixels.end(), part.pixels.begin(),
                          part.pixels.end());
        all.labels.insert(all.labels.end(), part.labels.begin(),
                          part.labels.end());
        found = true;
      }
      if (!found)
        throw FormatError("no data_batch_*.bin files under " + d.path);
      ds = std::move(all);
    } else {
      ds = load_cifar10_bin(d.path);
    }
  }
  if (d.limit > 0 && d.limit < ds.size()) {
    ds.pixels.resize(d.limit * kImageFloats);
    ds.labels.resize(d.limit);
  }
  return ds;
}

}  // namespace hvp
