// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

/// Dense float32 tensors with reverse-mode autodiff on an append-only tape.
///
/// Tensors are shared handles over contiguous row-major storage. Ops record
/// backward closures onto a Tape; Tape::backward walks them in reverse and
/// accumulates into .grad buffers. A non-recording tape runs the same
/// forwards gradient-free (selection phase).
///
/// Determinism: every reduction runs in a fixed sequential order per output
/// element; internal parallelism only splits independent outputs. Repeated
/// runs on identical inputs are bit-identical.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hvp/error.hpp"

namespace hvp {

using Shape = std::vector<int64_t>;

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar_value(float v);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  size_t ndim() const { return shape().size(); }
  int64_t dim(size_t i) const { return shape().at(i); }
  int64_t numel() const;

  float* data();
  const float* data() const;
  std::vector<float>& vec();
  const std::vector<float>& vec() const;
  float item() const;  // numel() == 1

  bool requires_grad() const;
  void set_requires_grad(bool v);

  bool has_grad() const;
  std::vector<float>& grad_vec();  // allocates zeros on first use
  const std::vector<float>& grad_vec() const;
  void zero_grad();   // zero in place if allocated
  void ensure_grad();

  bool same_storage(const Tensor& o) const { return impl_ == o.impl_; }

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  void record(std::function<void()> backward_fn);
  size_t size() const { return nodes_.size(); }

  // Seeds d(loss)=1, runs recorded closures in reverse append order,
  // accumulates into reachable .grad buffers, then clears the tape.
  void backward(const Tensor& loss);
  void clear() { nodes_.clear(); }

 private:
  bool recording_;
  std::vector<std::function<void()>> nodes_;
};

namespace ops {

// out[m,j] = sum_i x[m,i] * W[i,j] + b[j]
Tensor affine(Tape& tape, const Tensor& x, const Tensor& W, const Tensor& b);

// 3x3 cross-correlation, stride in {1,2}, pad in {0,1}
// x: [M,C,H,W], k: [F,C,3,3] -> [M,F,H',W']
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& k, int stride,
              int pad);

// out[m,c,h,w] = x[m,c,h,w] + b[c]
Tensor channel_bias(Tape& tape, const Tensor& x, const Tensor& b);

Tensor relu(Tape& tape, const Tensor& x);

// [M,C,H,W] -> [M,C], mean over spatial positions
Tensor global_average_pool(Tape& tape, const Tensor& x);

// rows scaled by 1/max(||row||_2, eps)
Tensor l2_normalize(Tape& tape, const Tensor& x, float eps = 1e-8f);

// [M,D],[M,D] -> [M]
Tensor row_dot(Tape& tape, const Tensor& a, const Tensor& b);

// [M,D],[N,D] -> [M,N]  (a * b^T)
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(Tape& tape, const Tensor& x, float c);
Tensor mean_all(Tape& tape, const Tensor& x);  // -> [1]

// detached copy; no gradient flows into the argument
Tensor stop_grad(const Tensor& x);

Tensor diag_part(Tape& tape, const Tensor& x);  // [M,M] -> [M]

// per-row log sum exp; optionally excludes the diagonal entry (square input)
Tensor logsumexp_rows(Tape& tape, const Tensor& x, bool exclude_diag);

// elementwise log(exp(a) + exp(b)), stable
Tensor logaddexp(Tape& tape, const Tensor& a, const Tensor& b);

// [M,C] + labels -> [M] losses
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             const std::vector<int>& labels);

}  // namespace ops

// SGD with momentum and decoupled-from-schedule weight decay:
//   g' = grad + wd * param;  v = momentum * v + g';  param -= lr * v
struct OptimizerState {
  struct Slot {
    Tensor param;
    std::vector<float> velocity;
  };
  std::vector<Slot> slots;
  float momentum = 0.9f;
  float weight_decay = 0.0f;

  static OptimizerState for_params(const std::vector<Tensor>& params,
                                   float momentum, float weight_decay);
};

void sgd_step(OptimizerState& state, float lr);

// half-cosine decay; clamps to min_lr past total_steps
float cosine_lr(int64_t step, int64_t total_steps, float base_lr,
                float min_lr);

}  // namespace hvp
