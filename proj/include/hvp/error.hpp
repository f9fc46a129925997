// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hvp {

// Violated operation precondition or shape contract.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed file content (checkpoints, dataset binaries, configs).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted at runtime (non-finite loss).
struct TrainingAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define HVP_CHECK(cond, msg)                                  \
  do {                                                        \
    if (!(cond)) throw ::hvp::ContractViolation(msg);         \
  } while (0)

}  // namespace hvp
