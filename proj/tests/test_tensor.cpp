// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "hvp/tensor.hpp"
#include "support/fd_suite.hpp"

using namespace hvp;

TEST_CASE("affine hand examples") {
  Tape t(false);
  // x=[[1,0]], W=[[2,0],[0,3]], b=[0,0] -> [[2,0]]
  Tensor x = Tensor::from_data({1, 2}, {1, 0});
  Tensor w = Tensor::from_data({2, 2}, {2, 0, 0, 3});
  Tensor b = Tensor::from_data({2}, {0, 0});
  Tensor out = ops::affine(t, x, w, b);
  CHECK(out.data()[0] == 2.0f);
  CHECK(out.data()[1] == 0.0f);

  // identity case
  Tensor i2 = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  Tensor out2 = ops::affine(t, i2, i2, b);
  CHECK(std::memcmp(out2.data(), i2.data(), 4 * sizeof(float)) == 0);

  // x=[[1,1]], W=all-ones, b=[1,1] -> [[3,3]]
  Tensor x3 = Tensor::from_data({1, 2}, {1, 1});
  Tensor w3 = Tensor::from_data({2, 2}, {1, 1, 1, 1});
  Tensor b3 = Tensor::from_data({2}, {1, 1});
  Tensor out3 = ops::affine(t, x3, w3, b3);
  CHECK(out3.data()[0] == 3.0f);
  CHECK(out3.data()[1] == 3.0f);

  CHECK_THROWS_AS(ops::affine(t, x, Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6}), b),
                  ContractViolation);
}

TEST_CASE("conv2d hand examples") {
  Tape t(false);
  // all-ones 3x3 input and kernel, pad 1: center output is 9
  Tensor x = Tensor::from_data({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
  Tensor k = Tensor::from_data({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
  Tensor out = ops::conv2d(t, x, k, 1, 1);
  CHECK(out.dim(2) == 3);
  CHECK(out.data()[4] == 9.0f);
  CHECK(out.data()[0] == 4.0f);  // corner sees a 2x2 patch

  // all-zero input -> all-zero output
  Tensor xz = Tensor::zeros({2, 1, 4, 4});
  Tensor oz = ops::conv2d(t, xz, k, 1, 1);
  for (int64_t i = 0; i < oz.numel(); ++i) CHECK(oz.data()[i] == 0.0f);

  // delta kernel at center reproduces the input
  std::vector<float> kd(9, 0.0f);
  kd[4] = 1.0f;
  Tensor kid = Tensor::from_data({1, 1, 3, 3}, kd);
  std::vector<float> img(16);
  for (int i = 0; i < 16; ++i) img[i] = static_cast<float>(i) * 0.25f;
  Tensor xi = Tensor::from_data({1, 1, 4, 4}, img);
  Tensor oi = ops::conv2d(t, xi, kid, 1, 1);
  CHECK(std::memcmp(oi.data(), xi.data(), 16 * sizeof(float)) == 0);

  // floor semantics on odd extents: stride-2 pad-1 on 6x6 gives 3x3
  Tensor x6 = Tensor::zeros({1, 1, 6, 6});
  CHECK(ops::conv2d(t, x6, k, 2, 1).dim(2) == 3);

  // input too small for the window is a contract violation
  Tensor x2 = Tensor::zeros({1, 1, 2, 2});
  CHECK_THROWS_AS(ops::conv2d(t, x2, k, 1, 0), ContractViolation);
}

TEST_CASE("relu / pool / l2_normalize examples") {
  Tape t(false);
  Tensor x = Tensor::from_data({1, 2}, {-1, 2});
  Tensor r = ops::relu(t, x);
  CHECK(r.data()[0] == 0.0f);
  CHECK(r.data()[1] == 2.0f);

  Tensor c = Tensor::from_data({1, 1, 2, 2}, {5, 5, 5, 5});
  CHECK(ops::global_average_pool(t, c).data()[0] == 5.0f);

  Tensor v = Tensor::from_data({1, 2}, {3, 4});
  Tensor n = ops::l2_normalize(t, v);
  CHECK(n.data()[0] == doctest::Approx(0.6f));
  CHECK(n.data()[1] == doctest::Approx(0.8f));
}

TEST_CASE("l2_normalize rows have unit norm when input norm >= eps") {
  Tape t(false);
  Rng rng(11);
  Tensor x = oracle::random_tensor(rng, {64, 16}, -1, 1, false);
  Tensor n = ops::l2_normalize(t, x);
  for (int i = 0; i < 64; ++i) {
    float ss = 0;
    for (int j = 0; j < 16; ++j) ss += n.data()[i * 16 + j] * n.data()[i * 16 + j];
    CHECK(std::sqrt(ss) == doctest::Approx(1.0f).epsilon(1e-5));
  }
}

TEST_CASE("backward: quadratic, constant, accumulation, tape clearing") {
  // loss = x*x at x=3 -> grad 6
  {
    Tape t;
    Tensor x = Tensor::from_data({1}, {3.0f}, true);
    Tensor loss = ops::mul(t, x, x);
    t.backward(loss);
    CHECK(x.grad_vec()[0] == 6.0f);
    CHECK(t.size() == 0);  // cleared
  }
  // loss with no path to x: its grad stays zero
  {
    Tape t;
    Tensor x = Tensor::from_data({1}, {3.0f}, true);
    x.ensure_grad();
    Tensor c = Tensor::from_data({1}, {2.0f}, true);
    Tensor loss = ops::mul(t, c, c);
    t.backward(loss);
    CHECK(x.grad_vec()[0] == 0.0f);
  }
  // grads accumulate across backward calls
  {
    Tensor x = Tensor::from_data({1}, {3.0f}, true);
    for (int rep = 0; rep < 2; ++rep) {
      Tape t;
      Tensor loss = ops::mul(t, x, x);
      t.backward(loss);
    }
    CHECK(x.grad_vec()[0] == 12.0f);
  }
  // non-scalar loss / empty tape are contract violations
  {
    Tape t;
    Tensor x = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    CHECK_THROWS_AS(t.backward(x), ContractViolation);
    Tape t2;
    Tensor s = Tensor::from_data({1}, {1.0f}, true);
    CHECK_THROWS_AS(t2.backward(s), ContractViolation);
  }
}

TEST_CASE("stop_grad blocks gradient flow") {
  Tape t;
  Tensor x = Tensor::from_data({1}, {3.0f}, true);
  x.ensure_grad();
  Tensor loss = ops::mul(t, ops::stop_grad(x), x);
  t.backward(loss);
  CHECK(x.grad_vec()[0] == 3.0f);  // only the live factor contributes
}

TEST_CASE("sgd_step formula and error path") {
  // v=0, grad=1, wd=0, lr=0.1, m=0.9 -> param=-0.1, v=1
  Tensor p = Tensor::from_data({1}, {0.0f}, true);
  OptimizerState st = OptimizerState::for_params({p}, 0.9f, 0.0f);
  p.grad_vec()[0] = 1.0f;
  sgd_step(st, 0.1f);
  CHECK(p.data()[0] == doctest::Approx(-0.1f));
  CHECK(st.slots[0].velocity[0] == 1.0f);
  CHECK(p.grad_vec()[0] == 0.0f);  // grads zeroed

  // zero grad, zero wd: params unchanged
  Tensor q = Tensor::from_data({3}, {1, 2, 3}, true);
  OptimizerState st2 = OptimizerState::for_params({q}, 0.9f, 0.0f);
  sgd_step(st2, 0.5f);
  CHECK(q.data()[0] == 1.0f);
  CHECK(q.data()[2] == 3.0f);

  // weight decay only: param = 1 - 0.05*0.0001
  Tensor r = Tensor::from_data({1}, {1.0f}, true);
  OptimizerState st3 = OptimizerState::for_params({r}, 0.9f, 1e-4f);
  sgd_step(st3, 0.05f);
  CHECK(r.data()[0] == doctest::Approx(0.999995f).epsilon(1e-9));

  // missing grad is a contract violation
  OptimizerState st4;
  st4.slots.push_back({Tensor::from_data({1}, {1.0f}, true), {0.0f}});
  CHECK_THROWS_AS(sgd_step(st4, 0.1f), ContractViolation);
}

TEST_CASE("cosine_lr schedule") {
  CHECK(cosine_lr(0, 100, 0.05f, 0.0f) == doctest::Approx(0.05f));
  CHECK(cosine_lr(100, 100, 0.05f, 0.001f) == doctest::Approx(0.001f));
  CHECK(cosine_lr(50, 100, 0.05f, 0.01f) == doctest::Approx(0.03f));
  CHECK(cosine_lr(200, 100, 0.05f, 0.001f) == 0.001f);  // clamp past total
  // monotone non-increasing
  float prev = 1e9f;
  for (int s = 0; s <= 100; ++s) {
    const float lr = cosine_lr(s, 100, 0.05f, 0.0f);
    CHECK(lr <= prev + 1e-9f);
    prev = lr;
  }
}

TEST_CASE("forward results are bit-identical across repeated runs") {
  Rng rng(5);
  Tensor x = oracle::random_tensor(rng, {4, 3, 8, 8}, -1, 1, false);
  Tensor k = oracle::random_tensor(rng, {5, 3, 3, 3}, -1, 1, false);
  Tape t(false);
  Tensor a = ops::conv2d(t, x, k, 2, 1);
  Tensor b = ops::conv2d(t, x, k, 2, 1);
  CHECK(std::memcmp(a.data(), b.data(), a.numel() * sizeof(float)) == 0);
}

TEST_CASE("finite-difference oracle: all ops, 100 instances each") {
  auto results = fdsuite::run_fd_suite(100, /*seed=*/1234);
  for (const auto& r : results) {
    CAPTURE(r.op);
    CHECK(r.max_rel_err <= 1e-4);
  }
  CHECK(results.size() >= 15);
}
