// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hvp/logrecord.hpp"
#include "hvp/parallel.hpp"
#include "hvp/selection.hpp"

namespace hvp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string ckpt_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_epoch%04d.bin", epoch);
  return buf;
}

// drop lines from an existing artifact that belong to epochs after the
// resume point, so the resumed run's output matches an uninterrupted one
void truncate_jsonl_to_epoch(const std::string& path, int max_epoch) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::vector<std::string> keep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      if (j.at("epoch").get<int>() <= max_epoch) keep.push_back(line);
    } catch (const json::exception&) {
      // drop unparseable tail (interrupted write)
    }
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const std::string& l : keep) out << l << '\n';
}

void truncate_metrics_to_epoch(const std::string& path, int max_epoch) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::vector<std::string> keep;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      keep.push_back(line);
      first = false;
      continue;
    }
    if (line.empty()) continue;
    const int epoch = std::atoi(line.c_str());
    if (epoch <= max_epoch) keep.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const std::string& l : keep) out << l << '\n';
}

float lr_at_step(const TrainConfig& cfg, int64_t step, int64_t total_steps,
                 int64_t warmup_steps) {
  if (warmup_steps > 0 && step < warmup_steps)
    return cfg.base_lr * static_cast<float>(step + 1) /
           static_cast<float>(warmup_steps);
  return cosine_lr(step - warmup_steps, total_steps - warmup_steps,
                   cfg.base_lr, cfg.min_lr);
}

struct EpochAccum {
  double loss_sum = 0.0;
  int64_t loss_count = 0;
  double sel_iou_sum = 0.0;
  int64_t sel_count = 0;
  double all_iou_sum = 0.0;
  int64_t all_count = 0;
  int64_t lowest_hits = 0;
};

}  // namespace

TrainResult pretrain(const TrainConfig& cfg, uint64_t config_hash,
                     const Dataset& ds, const std::string& out_dir,
                     const std::string& resume_from) {
  cfg.validate();
  const size_t M = static_cast<size_t>(cfg.batch_size);
  HVP_CHECK(M <= ds.size(), "pretrain: batch size exceeds dataset length");
  const size_t steps_per_epoch = ds.size() / M;
  HVP_CHECK(steps_per_epoch >= 1, "pretrain: dataset yields no full batch");
  const int S = cfg.aug.out_size;
  const size_t img_floats = 3 * static_cast<size_t>(S) * S;
  const int64_t total_steps =
      static_cast<int64_t>(cfg.epochs) * static_cast<int64_t>(steps_per_epoch);
  const int64_t warmup_steps =
      static_cast<int64_t>(cfg.warmup_epochs) * steps_per_epoch;

  fs::create_directories(out_dir);
  TrainResult result;
  result.selection_log_path = (fs::path(out_dir) / "selection_log.jsonl").string();
  result.metrics_csv_path = (fs::path(out_dir) / "metrics.csv").string();

  ModelState model;
  RunCounters counters;
  int start_epoch = 0;
  std::vector<std::vector<float>> resume_main_v, resume_pred_v;

  if (!resume_from.empty()) {
    Checkpoint ck = load_checkpoint(resume_from);
    if (ck.meta.config_hash != config_hash)
      throw ConfigError(
          "resume refused: checkpoint config hash " +
          std::to_string(ck.meta.config_hash) + " does not match " +
          std::to_string(config_hash));
    model = ck.model;
    counters = ck.meta.counters;
    start_epoch = ck.meta.epoch + 1;
    resume_main_v = std::move(ck.main_velocity);
    resume_pred_v = std::move(ck.pred_velocity);
    truncate_jsonl_to_epoch(result.selection_log_path, ck.meta.epoch);
    truncate_metrics_to_epoch(result.metrics_csv_path, ck.meta.epoch);
    result.final_checkpoint = resume_from;
  } else {
    model = init_model(cfg.seed, cfg.widths);
    std::ofstream(result.selection_log_path, std::ios::trunc);
    std::ofstream m(result.metrics_csv_path, std::ios::trunc);
    m << kMetricsHeader << '\n';
  }

  OptimizerState opt_main = OptimizerState::for_params(
      model.encoder_projector_params(), cfg.momentum, cfg.weight_decay);
  OptimizerState opt_pred = OptimizerState::for_params(
      model.predictor_params(), cfg.momentum, cfg.weight_decay);
  if (!resume_from.empty()) {
    for (size_t i = 0; i < opt_main.slots.size(); ++i)
      opt_main.slots[i].velocity = resume_main_v[i];
    for (size_t i = 0; i < opt_pred.slots.size(); ++i)
      opt_pred.slots[i].velocity = resume_pred_v[i];
  }

  if (start_epoch >= cfg.epochs) {
    result.epochs_completed = 0;  // nothing left to do
    result.counters = counters;
    return result;
  }

  std::ofstream log(result.selection_log_path, std::ios::app);
  std::ofstream metrics(result.metrics_csv_path, std::ios::app);
  metrics.precision(10);

  auto save_epoch_ckpt = [&](int epoch, int64_t step,
                             const std::string& name) {
    CheckpointMeta meta;
    meta.seed = cfg.seed;
    meta.step = step;
    meta.epoch = epoch;
    meta.config_hash = config_hash;
    meta.widths = cfg.widths;
    meta.counters = counters;
    std::vector<std::vector<float>> mv, pv;
    for (auto& s : opt_main.slots) mv.push_back(s.velocity);
    for (auto& s : opt_pred.slots) pv.push_back(s.velocity);
    const std::string path = (fs::path(out_dir) / name).string();
    save_checkpoint(path, model, mv, pv, meta);
    return path;
  };

  const auto wall_start = std::chrono::steady_clock::now();
  const double wall_base = counters.wall_seconds;
  auto wall_now = [&] {
    return wall_base + std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - wall_start)
                           .count();
  };

  std::vector<ViewParams> vparams;            // [M * n_views]
  std::vector<std::vector<float>> view_imgs;  // per view: [M * img_floats]

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const BatchPlan plan = batches(ds.size(), M, cfg.seed, epoch);
    EpochAccum acc;
    float lr_last = 0.0f;

    for (size_t b = 0; b < steps_per_epoch; ++b) {
      const int64_t step = static_cast<int64_t>(epoch) * steps_per_epoch + b;
      const auto batch_idx = plan.batch(b);

      const bool policy_active =
          cfg.iou_policy.has_value() &&
          (!cfg.iou_policy->alternate || step % 2 == 0);
      const bool gated =
          !cfg.iou_policy.has_value() && hvp_gate(step, cfg.n_step);
      const int nv = gated ? cfg.n_views : 2;

      // --- sample and materialize views ---
      vparams.assign(static_cast<size_t>(M) * nv, ViewParams{});
      view_imgs.assign(nv, {});
      for (auto& v : view_imgs) v.resize(M * img_floats);
      const bool geometry_only_sel = cfg.select_before_appearance && gated;

      parallel_for(M, [&](size_t i0, size_t i1) {
        for (size_t i = i0; i < i1; ++i) {
          const size_t src = batch_idx[i];
          ViewParams* vp = &vparams[i * nv];
          if (policy_active) {
            Rng rng = Rng::keyed(cfg.seed, rngtag::kAugment,
                                 static_cast<uint64_t>(step), i, 0);
            const float thr = iou_threshold(epoch, *cfg.iou_policy);
            auto [a, bvp] = iou_rejection_sample(rng, cfg.aug, S, S, thr,
                                                 cfg.iou_policy->max_retries);
            vp[0] = a;
            vp[1] = bvp;
          } else {
            for (int n = 0; n < nv; ++n) {
              Rng rng = Rng::keyed(cfg.seed, rngtag::kAugment,
                                   static_cast<uint64_t>(step), i, n);
              vp[n] = sample_view_params(rng, cfg.aug, S, S);
            }
            if (cfg.static_appearance) {
              std::vector<ViewParams> tmp(vp, vp + nv);
              Rng jrng = Rng::keyed(cfg.seed, rngtag::kJitterShared,
                                    static_cast<uint64_t>(step), i);
              static_appearance_mode(jrng, cfg.aug, tmp);
              std::copy(tmp.begin(), tmp.end(), vp);
            }
          }
          for (int n = 0; n < nv; ++n) {
            auto img = apply_view(ds.image(src), S, S, vp[n], S,
                                  geometry_only_sel);
            std::copy(img.begin(), img.end(),
                      view_imgs[n].begin() + i * img_floats);
          }
        }
      });

      // --- selection phase ---
      std::vector<int> chosen(M, 0);
      std::vector<std::pair<int, int>> pair_index = {{0, 1}};
      if (gated) {
        Tape no_grad(/*recording=*/false);
        ViewEmbeddings emb;
        for (int n = 0; n < nv; ++n) {
          Tensor imgs = Tensor::from_data(
              {static_cast<int64_t>(M), 3, S, S}, view_imgs[n]);
          Tensor h = encode(no_grad, imgs, model);
          Tensor z = project(no_grad, h, model);
          emb.z.push_back(ops::l2_normalize(no_grad, z));
          if (cfg.objective == Objective::kSimSiam) {
            Tensor p = predict(no_grad, z, model);
            emb.p.push_back(ops::l2_normalize(no_grad, p));
          }
        }
        counters.selection_forward_count += static_cast<uint64_t>(nv) * M;

        Rng cap_rng = Rng::keyed(cfg.seed, rngtag::kPairCap,
                                 static_cast<uint64_t>(step));
        PairLossMatrix matrix =
            pairwise_loss_matrix(emb, cfg.objective, cfg.tau,
                                 cfg.simclr_denominator, cfg.pair_cap, cap_rng);
        for (float v : matrix.losses)
          if (!std::isfinite(v)) {
            save_epoch_ckpt(epoch - 1, step, "abort_diagnostic.bin");
            throw TrainingAbort("non-finite selection loss at step " +
                                std::to_string(step));
          }

        Rng sel_rng = Rng::keyed(cfg.seed, rngtag::kSelect,
                                 static_cast<uint64_t>(step));
        SelectionResult sel = select_pairs(matrix, cfg.mode, sel_rng);
        chosen = sel.chosen_pair;
        pair_index = matrix.pair_index;

        // --- log records & epoch stats ---
        for (size_t i = 0; i < M; ++i) {
          SelectionLogRecord rec;
          rec.step = step;
          rec.epoch = epoch;
          rec.sample = static_cast<int64_t>(batch_idx[i]);
          rec.src_w = S;
          rec.src_h = S;
          double min_iou = 2.0;
          for (int q = 0; q < matrix.p(); ++q) {
            const auto [k, l] = matrix.pair_index[q];
            PairRecord pr;
            pr.k = k;
            pr.l = l;
            pr.loss = matrix.at(i, q);
            pr.iou = iou(vparams[i * nv + k].crop, vparams[i * nv + l].crop);
            pr.rcd = rel_center_distance(vparams[i * nv + k].crop,
                                         vparams[i * nv + l].crop, S, S);
            pr.cd = color_distance(vparams[i * nv + k], vparams[i * nv + l]);
            rec.pairs.push_back(pr);
            min_iou = std::min(min_iou, pr.iou);
            acc.all_iou_sum += pr.iou;
            ++acc.all_count;
          }
          rec.chosen = chosen[i];
          rec.chosen_loss = sel.chosen_loss[i];
          rec.views.assign(vparams.begin() + i * nv,
                           vparams.begin() + (i + 1) * nv);
          log << record_to_json(rec).dump() << '\n';

          const double ch_iou = rec.pairs[rec.chosen].iou;
          acc.sel_iou_sum += ch_iou;
          ++acc.sel_count;
          if (ch_iou <= min_iou) ++acc.lowest_hits;
        }
      }

      // --- training phase on the chosen pairs ---
      std::vector<float> xa(M * img_floats), xb(M * img_floats);
      parallel_for(M, [&](size_t i0, size_t i1) {
        for (size_t i = i0; i < i1; ++i) {
          const auto [k, l] = pair_index[chosen[i]];
          if (geometry_only_sel) {
            // selection ran on geometry-only views; apply full pipeline now
            const size_t src = batch_idx[i];
            auto a = apply_view(ds.image(src), S, S, vparams[i * nv + k], S);
            auto bimg = apply_view(ds.image(src), S, S, vparams[i * nv + l], S);
            std::copy(a.begin(), a.end(), xa.begin() + i * img_floats);
            std::copy(bimg.begin(), bimg.end(), xb.begin() + i * img_floats);
          } else {
            std::copy(view_imgs[k].begin() + i * img_floats,
                      view_imgs[k].begin() + (i + 1) * img_floats,
                      xa.begin() + i * img_floats);
            std::copy(view_imgs[l].begin() + i * img_floats,
                      view_imgs[l].begin() + (i + 1) * img_floats,
                      xb.begin() + i * img_floats);
          }
        }
      });

      Tape tape;
      Tensor ta = Tensor::from_data({static_cast<int64_t>(M), 3, S, S}, xa);
      Tensor tb = Tensor::from_data({static_cast<int64_t>(M), 3, S, S}, xb);
      Tensor za = project(tape, encode(tape, ta, model), model);
      Tensor zb = project(tape, encode(tape, tb, model), model);
      Tensor loss_rows;
      if (cfg.objective == Objective::kSimSiam) {
        Tensor pa = predict(tape, za, model);
        Tensor pb = predict(tape, zb, model);
        loss_rows = simsiam_pair_loss(tape, pa, zb, pb, za);
      } else {
        loss_rows = simclr_pair_loss(tape, za, zb, cfg.tau,
                                     cfg.simclr_denominator);
      }
      Tensor loss = ops::mean_all(tape, loss_rows);
      counters.training_forward_count += 2 * static_cast<uint64_t>(M);

      if (!std::isfinite(loss.item())) {
        save_epoch_ckpt(epoch - 1, step, "abort_diagnostic.bin");
        throw TrainingAbort("non-finite training loss at step " +
                            std::to_string(step));
      }

      tape.backward(loss);
      const float lr = lr_at_step(cfg, step, total_steps, warmup_steps);
      sgd_step(opt_main, lr);
      sgd_step(opt_pred, cfg.fix_pred_lr ? cfg.base_lr : lr);
      ++counters.optimizer_steps;
      lr_last = lr;

      acc.loss_sum += loss.item();
      ++acc.loss_count;
    }

    // --- end of epoch: metrics, counters, checkpoint ---
    counters.wall_seconds = wall_now();
    EpochMetrics em;
    em.epoch = epoch;
    em.mean_train_loss = acc.loss_sum / std::max<int64_t>(1, acc.loss_count);
    em.lr_last = lr_last;
    em.counters = counters;
    em.has_selection_stats = acc.sel_count > 0;
    if (em.has_selection_stats) {
      em.mean_selected_iou = acc.sel_iou_sum / acc.sel_count;
      em.mean_random_iou = acc.all_iou_sum / acc.all_count;
      em.frac_lowest_iou_selected =
          static_cast<double>(acc.lowest_hits) / acc.sel_count;
    }
    result.epoch_metrics.push_back(em);

    metrics << epoch << ',' << em.mean_train_loss << ',' << em.lr_last << ','
            << counters.selection_forward_count << ','
            << counters.training_forward_count << ',' << counters.wall_seconds
            << ',' << em.mean_selected_iou << ',' << em.mean_random_iou << ','
            << em.frac_lowest_iou_selected << '\n';
    metrics.flush();
    log.flush();

    {
      std::ofstream cj((fs::path(out_dir) / "counters.json").string(),
                       std::ios::trunc);
      json c = {{"selection_forward_count", counters.selection_forward_count},
                {"training_forward_count", counters.training_forward_count},
                {"optimizer_steps", counters.optimizer_steps},
                {"wall_seconds", counters.wall_seconds}};
      cj << c.dump(2) << '\n';
    }

    if ((epoch + 1) % cfg.checkpoint_every == 0 || epoch == cfg.epochs - 1) {
      const std::string path = save_epoch_ckpt(
          epoch, static_cast<int64_t>(counters.optimizer_steps),
          ckpt_name(epoch));
      result.checkpoints.push_back(path);
      result.final_checkpoint = path;
    }
    ++result.epochs_completed;
  }

  result.counters = counters;
  return result;
}

}  // namespace hvp
