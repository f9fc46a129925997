// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/parallel.hpp"

#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace hvp {

namespace {

int resolve_thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("HVP_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) hw = v;
  }
  return hw;
}

// Minimal persistent fork-join pool. Each job is a static partition of
// [0, n); the calling thread executes part 0.
class Pool {
 public:
  Pool() : nthreads_(resolve_thread_count()) {
    for (int i = 1; i < nthreads_; ++i)
      workers_.emplace_back([this, i] { worker_loop(i); });
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  int size() const { return nthreads_; }

  void run(size_t n, const std::function<void(size_t, size_t)>& body) {
    int parts = nthreads_;
    if (static_cast<size_t>(parts) > n) parts = static_cast<int>(n);
    if (parts <= 1) {
      body(0, n);
      return;
    }
    {
      std::lock_guard<std::mutex> lk(mu_);
      job_body_ = &body;
      job_n_ = n;
      job_parts_ = parts;
      pending_ = parts - 1;
      ++generation_;
    }
    cv_.notify_all();
    run_part(0);
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_body_ = nullptr;
  }

 private:
  void run_part(int part) {
    size_t chunk = (job_n_ + job_parts_ - 1) / job_parts_;
    size_t b = chunk * static_cast<size_t>(part);
    size_t e = b + chunk;
    if (e > job_n_) e = job_n_;
    if (b < e) (*job_body_)(b, e);
  }

  void worker_loop(int index) {
    uint64_t seen = 0;
    for (;;) {
      int part = -1;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        if (index < job_parts_) part = index;
      }
      if (part > 0) {
        run_part(part);
        std::lock_guard<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  const int nthreads_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  bool stop_ = false;
  uint64_t generation_ = 0;
  const std::function<void(size_t, size_t)>* job_body_ = nullptr;
  size_t job_n_ = 0;
  int job_parts_ = 0;
  int pending_ = 0;
};

Pool& pool() {
  static Pool p;
  return p;
}

thread_local bool in_parallel_region = false;

}  // namespace

int thread_count() { return pool().size(); }

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body) {
  if (n == 0) return;
  if (in_parallel_region || pool().size() <= 1) {
    body(0, n);
    return;
  }
  in_parallel_region = true;
  pool().run(n, body);
  in_parallel_region = false;
}

}  // namespace hvp
