// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loaa/core/grad_check.hpp"
#include "loaa/core/tensor.hpp"
#include "loaa/model/config.hpp"

namespace loaa {

struct GradcheckCase {
  std::string op;     // operation or composite block
  std::string input;  // which argument was perturbed
  GradCheckReport report;
};

struct GradcheckSuiteOptions {
  std::uint64_t seed = 0;
  // Coordinates perturbed per composite-block input; 0 checks all of them.
  std::size_t block_max_elements = 0;
  // Coordinates perturbed in the frozen backbone weights of each block.
  std::size_t weight_samples = 2048;
  // Scales the backward pass of one op to prove the suite can fail.
  std::optional<OpTag> inject_fault;
};

struct GradcheckSuite {
  std::vector<GradcheckCase> cases;

  bool passed() const;
  // Distinct op names with at least one failing case, in suite order.
  std::vector<std::string> failing_ops() const;
  // Distinct op names checked.
  std::vector<std::string> ops() const;
  double max_rel_error(const std::string& op) const;
};

// Primitive ops on small random shapes, then one attention and one FFN block
// of the given backbone geometry with a 3x3 adapter attached.
GradcheckSuite run_gradcheck_suite(const BackboneConfig& backbone, const GradcheckSuiteOptions& opts = {});

OpTag parse_op_tag(std::string_view name);

}  // namespace loaa
