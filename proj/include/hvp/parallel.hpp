// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace hvp {

// Number of worker threads. Defaults to hardware concurrency, capped by the
// HVP_THREADS environment variable (read once at first use).
int thread_count();

// Runs body(begin, end) over a static partition of [0, n). Bodies must write
// to disjoint outputs; the partition is deterministic but results must not
// depend on it. Nested calls run inline.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body);

}  // namespace hvp
