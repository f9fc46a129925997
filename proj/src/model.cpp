// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/model.hpp"

#include <cmath>

#include "hvp/rng.hpp"

namespace hvp {

namespace {

Tensor kaiming_uniform(Rng& rng, Shape shape, int64_t fan_in) {
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  for (int64_t i = 0; i < t.numel(); ++i)
    t.data()[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

ModelState init_model(uint64_t seed, const ModelWidths& widths) {
  HVP_CHECK(widths.d_z > 0 && widths.d_pred > 0,
            "init_model: widths must be positive");
  ModelState m;
  m.widths = widths;
  int pidx = 0;
  auto next_rng = [&] { return Rng::keyed(seed, rngtag::kInit, pidx++); };

  auto conv = [&](int f, int c) {
    Rng r = next_rng();
    return kaiming_uniform(r, {f, c, 3, 3}, static_cast<int64_t>(c) * 9);
  };
  auto linear = [&](int din, int dout) {
    Rng r = next_rng();
    return kaiming_uniform(r, {din, dout}, din);
  };
  auto bias = [&](int d) { return Tensor::zeros({d}, true); };

  m.conv1_w = conv(32, 3);
  m.conv1_b = bias(32);
  m.conv2_w = conv(64, 32);
  m.conv2_b = bias(64);
  m.conv3_w = conv(128, 64);
  m.conv3_b = bias(128);
  m.proj_w1 = linear(kFeatureDim, 256);
  m.proj_b1 = bias(256);
  m.proj_w2 = linear(256, widths.d_z);
  m.proj_b2 = bias(widths.d_z);
  m.pred_w1 = linear(widths.d_z, widths.d_pred);
  m.pred_b1 = bias(widths.d_pred);
  m.pred_w2 = linear(widths.d_pred, widths.d_z);
  m.pred_b2 = bias(widths.d_z);
  return m;
}

std::vector<std::pair<std::string, Tensor>> ModelState::named_params() const {
  return {
      {"conv1.w", conv1_w}, {"conv1.b", conv1_b}, {"conv2.w", conv2_w},
      {"conv2.b", conv2_b}, {"conv3.w", conv3_w}, {"conv3.b", conv3_b},
      {"proj.w1", proj_w1}, {"proj.b1", proj_b1}, {"proj.w2", proj_w2},
      {"proj.b2", proj_b2}, {"pred.w1", pred_w1}, {"pred.b1", pred_b1},
      {"pred.w2", pred_w2}, {"pred.b2", pred_b2},
  };
}

std::vector<Tensor> ModelState::encoder_projector_params() const {
  return {conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b,
          proj_w1, proj_b1, proj_w2, proj_b2};
}

std::vector<Tensor> ModelState::predictor_params() const {
  return {pred_w1, pred_b1, pred_w2, pred_b2};
}

std::vector<Tensor> ModelState::all_params() const {
  auto v = encoder_projector_params();
  auto p = predictor_params();
  v.insert(v.end(), p.begin(), p.end());
  return v;
}

Tensor encode(Tape& tape, const Tensor& images, const ModelState& m) {
  HVP_CHECK(images.ndim() == 4 && images.dim(1) == 3,
            "encode: images must be [M,3,S,S]");
  for (const Tensor& p : m.all_params())
    for (int64_t i = 0; i < p.numel(); ++i)
      HVP_CHECK(std::isfinite(p.data()[i]), "encode: non-finite parameter");

  Tensor x = ops::conv2d(tape, images, m.conv1_w, /*stride=*/1, /*pad=*/1);
  x = ops::relu(tape, ops::channel_bias(tape, x, m.conv1_b));
  x = ops::conv2d(tape, x, m.conv2_w, /*stride=*/2, /*pad=*/1);
  x = ops::relu(tape, ops::channel_bias(tape, x, m.conv2_b));
  x = ops::conv2d(tape, x, m.conv3_w, /*stride=*/2, /*pad=*/1);
  x = ops::relu(tape, ops::channel_bias(tape, x, m.conv3_b));
  return ops::global_average_pool(tape, x);
}

Tensor project(Tape& tape, const Tensor& h, const ModelState& m) {
  Tensor x = ops::relu(tape, ops::affine(tape, h, m.proj_w1, m.proj_b1));
  return ops::affine(tape, x, m.proj_w2, m.proj_b2);
}

Tensor predict(Tape& tape, const Tensor& z, const ModelState& m) {
  Tensor x = ops::relu(tape, ops::affine(tape, z, m.pred_w1, m.pred_b1));
  return ops::affine(tape, x, m.pred_w2, m.pred_b2);
}

}  // namespace hvp
