// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

// hvp: pretrain / eval / analyze entry point.
//
// Exit codes: 0 success, 2 config error, 3 runtime abort (non-finite loss),
// 4 I/O or file-format error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hvp/analysis.hpp"
#include "hvp/checkpoint.hpp"
#include "hvp/config.hpp"
#include "hvp/eval.hpp"
#include "hvp/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;
constexpr int kExitIo = 4;

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string run_id_for(const hvp::RunConfig& rc) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx-s%llu",
                static_cast<unsigned long long>(rc.config_hash),
                static_cast<unsigned long long>(rc.train.seed));
  return buf;
}

int cmd_pretrain(const std::string& config_path, const std::string& out_dir,
                 const std::string& resume) {
  hvp::RunConfig rc = hvp::parse_run_config_file(config_path);
  hvp::Dataset ds = hvp::load_dataset(rc.data);

  fs::create_directories(out_dir);
  json manifest;
  manifest["run_id"] = run_id_for(rc);
  manifest["config"] = rc.snapshot;
  manifest["config_hash"] = rc.config_hash;
  manifest["version"] = "hvp 0.1.0";
  manifest["start_time"] = timestamp_utc();

  hvp::TrainResult res =
      hvp::pretrain(rc.train, rc.config_hash, ds, out_dir, resume);

  manifest["end_time"] = timestamp_utc();
  manifest["artifacts"] = {
      {"checkpoints", res.checkpoints},
      {"final_checkpoint", res.final_checkpoint},
      {"selection_log", res.selection_log_path},
      {"metrics_csv", res.metrics_csv_path},
      {"counters", (fs::path(out_dir) / "counters.json").string()},
  };
  std::ofstream mf((fs::path(out_dir) / "manifest.json").string(),
                   std::ios::trunc);
  mf << manifest.dump(2) << '\n';

  std::cout << "run " << manifest["run_id"].get<std::string>() << ": "
            << res.epochs_completed << " epoch(s), final checkpoint "
            << res.final_checkpoint << '\n';
  return kExitOk;
}

hvp::DataConfig parse_data_arg(const std::string& arg) {
  // either a path (file/dir of CIFAR-10 binaries) or
  // "synth:seed=S,n=N,classes=C"
  hvp::DataConfig d;
  if (arg.rfind("synth:", 0) == 0 || arg == "synth") {
    d.kind = hvp::DataConfig::Kind::kSynth;
    std::string rest = arg == "synth" ? "" : arg.substr(6);
    std::stringstream ss(rest);
    std::string kv;
    while (std::getline(ss, kv, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw hvp::ConfigError("bad synth data spec item: " + kv);
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "seed")
        d.seed = std::stoull(val);
      else if (key == "n")
        d.n = std::stoull(val);
      else if (key == "classes")
        d.num_classes = std::stoi(val);
      else
        throw hvp::ConfigError("unknown synth data key: " + key);
    }
  } else {
    d.kind = hvp::DataConfig::Kind::kCifar10;
    d.path = arg;
  }
  return d;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_arg,
             const std::string& protocol, const std::string& out_csv, int k,
             float temperature, int probe_epochs, float probe_lr) {
  if (!fs::exists(ckpt_path))
    throw hvp::FormatError("checkpoint not found: " + ckpt_path);
  hvp::Checkpoint ck = hvp::load_checkpoint(ckpt_path);

  hvp::DataConfig dc = parse_data_arg(data_arg);
  hvp::Dataset train_ds, test_ds;
  if (dc.kind == hvp::DataConfig::Kind::kSynth) {
    train_ds = hvp::synth_dataset(dc.seed, dc.n, dc.num_classes);
    test_ds = hvp::synth_dataset(dc.seed + 1, std::max<size_t>(dc.n / 5, 32),
                                 dc.num_classes);
  } else {
    fs::path p(dc.path);
    if (fs::is_directory(p)) {
      hvp::DataConfig trainc = dc;
      train_ds = hvp::load_dataset(trainc);
      const fs::path tb = p / "test_batch.bin";
      if (fs::exists(tb)) {
        test_ds = hvp::load_cifar10_bin(tb.string());
      } else {
        throw hvp::FormatError("no test_batch.bin under " + dc.path);
      }
    } else {
      // single file: deterministic 90/10 split
      hvp::Dataset all = hvp::load_cifar10_bin(dc.path);
      const size_t ntest = std::max<size_t>(1, all.size() / 10);
      const size_t ntrain = all.size() - ntest;
      train_ds.num_classes = test_ds.num_classes = all.num_classes;
      train_ds.pixels.assign(all.pixels.begin(),
                             all.pixels.begin() + ntrain * hvp::kImageFloats);
      train_ds.labels.assign(all.labels.begin(), all.labels.begin() + ntrain);
      test_ds.pixels.assign(all.pixels.begin() + ntrain * hvp::kImageFloats,
                            all.pixels.end());
      test_ds.labels.assign(all.labels.begin() + ntrain, all.labels.end());
    }
  }

  hvp::FeatureBank train_bank = hvp::extract_features(ck.model, train_ds);
  hvp::FeatureBank test_bank = hvp::extract_features(ck.model, test_ds);

  double knn_acc = -1.0, linear_acc = -1.0;
  if (protocol == "knn")
    knn_acc = hvp::knn_eval(train_bank, test_bank, k, temperature);
  else
    linear_acc = hvp::linear_probe(train_bank, test_bank, probe_epochs,
                                   probe_lr, ck.meta.seed);
  const hvp::CollapseMetrics cm = hvp::collapse_metrics(test_bank);

  const bool fresh = !fs::exists(out_csv);
  std::ofstream f(out_csv, std::ios::app);
  if (!f) throw hvp::FormatError("cannot write results csv: " + out_csv);
  f.precision(10);
  if (fresh)
    f << "run_id,checkpoint,protocol,knn_acc,linear_acc,per_dim_std_mean,"
         "effective_rank\n";
  char run_id[32];
  std::snprintf(run_id, sizeof(run_id), "%016llx-s%llu",
                static_cast<unsigned long long>(ck.meta.config_hash),
                static_cast<unsigned long long>(ck.meta.seed));
  f << run_id << ',' << ckpt_path << ',' << protocol << ',' << knn_acc << ','
    << linear_acc << ',' << cm.per_dim_std_mean << ',' << cm.effective_rank
    << '\n';

  std::cout.precision(4);
  std::cout << std::fixed
            << (protocol == "knn" ? knn_acc : linear_acc) << '\n';
  return kExitOk;
}

int cmd_analyze(const std::vector<std::string>& logs,
                const std::string& baseline_log, const std::string& out_dir,
                int bucket_width) {
  for (const std::string& p : logs)
    if (!fs::exists(p)) throw hvp::FormatError("log not found: " + p);
  fs::create_directories(out_dir);

  hvp::SelectionStats stats = hvp::compute_stats_files(logs, bucket_width);
  hvp::write_stats_csv(stats, (fs::path(out_dir) / "stats.csv").string());
  hvp::write_histogram_csv(stats,
                           (fs::path(out_dir) / "histogram.csv").string());

  double overall_frac = 0.0, overall_sel = 0.0, overall_rand = 0.0;
  for (size_t i = 0; i < stats.buckets(); ++i) {
    overall_frac += stats.frac_lowest_iou_selected[i];
    overall_sel += stats.mean_iou_selected[i];
    overall_rand += stats.mean_iou_random[i];
  }
  if (!stats.buckets()) throw hvp::FormatError("no buckets in selection log");
  overall_frac /= stats.buckets();
  overall_sel /= stats.buckets();
  overall_rand /= stats.buckets();

  double loss_elevated = -1.0;
  if (!baseline_log.empty()) {
    if (!fs::exists(baseline_log))
      throw hvp::FormatError("baseline log not found: " + baseline_log);
    hvp::SelectionStats base =
        hvp::compute_stats_files({baseline_log}, bucket_width);
    hvp::CompareReport rep = hvp::compare_runs(stats, base);
    hvp::write_compare_csv(rep, (fs::path(out_dir) / "compare.csv").string());
    loss_elevated = rep.loss_elevated;
  }

  std::cout.precision(4);
  std::cout << std::fixed << "frac_lowest_iou=" << overall_frac
            << " mean_iou_delta=" << overall_sel - overall_rand;
  if (loss_elevated >= 0.0) std::cout << " loss_elevated=" << loss_elevated;
  std::cout << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hard-view pretraining lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume;
  CLI::App* pre = app.add_subcommand("pretrain", "run pretraining");
  pre->add_option("--config", config_path, "config JSON path")->required();
  pre->add_option("--out", out_dir, "output directory")->required();
  pre->add_option("--resume", resume, "checkpoint to resume from");

  std::string ckpt, data_arg, protocol = "knn", out_csv = "results.csv";
  int k = 20, probe_epochs = 50;
  float temperature = 0.07f, probe_lr = 0.1f;
  CLI::App* ev = app.add_subcommand("eval", "evaluate frozen features");
  ev->add_option("--checkpoint", ckpt, "checkpoint path")->required();
  ev->add_option("--data", data_arg,
                 "dataset: path or synth:seed=S,n=N,classes=C")
      ->required();
  ev->add_option("--protocol", protocol, "knn or linear")
      ->check(CLI::IsMember({"knn", "linear"}));
  ev->add_option("--out", out_csv, "results CSV (appended)");
  ev->add_option("--k", k, "k-NN neighbor count");
  ev->add_option("--temperature", temperature, "k-NN vote temperature");
  ev->add_option("--epochs", probe_epochs, "linear probe epochs");
  ev->add_option("--lr", probe_lr, "linear probe learning rate");

  std::vector<std::string> logs;
  std::string baseline_log, analyze_out = "analysis";
  int bucket_width = 1;
  CLI::App* an = app.add_subcommand("analyze", "selection-pattern statistics");
  an->add_option("--log", logs, "selection log JSONL (repeatable)")
      ->required();
  an->add_option("--baseline-log", baseline_log, "baseline selection log");
  an->add_option("--out", analyze_out, "output directory");
  an->add_option("--bucket-width", bucket_width, "epochs per bucket");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (pre->parsed()) return cmd_pretrain(config_path, out_dir, resume);
    if (ev->parsed())
      return cmd_eval(ckpt, data_arg, protocol, out_csv, k, temperature,
                      probe_epochs, probe_lr);
    if (an->parsed())
      return cmd_analyze(logs, baseline_log, analyze_out, bucket_width);
  } catch (const hvp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hvp::TrainingAbort& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return kExitAbort;
  } catch (const hvp::FormatError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const hvp::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
