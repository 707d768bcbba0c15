// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "loaa/core/tensor.hpp"

namespace loaa {

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  // Elements whose analytic and numeric gradients differ by no more than
  // this are counted as exact.
  double abs_floor = 1e-8;
  // When nonzero and smaller than the input size, only this many
  // coordinates, drawn from sample_seed, are perturbed.
  std::size_t max_elements = 0;
  std::uint64_t sample_seed = 0;
};

struct GradCheckReport {
  std::size_t n_checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  bool verifiable = true;
  bool passed = false;
  std::vector<double> rel_errors;
};

using ScalarFn = std::function<Tensor<double>(const Tensor<double>&)>;

// Compares the reverse-mode gradient of f at x with central differences
// (f(x+h) - f(x-h)) / 2h, element by element. f must return a scalar and be
// deterministic; a function that returns different values for the same input
// is reported as unverifiable (passed == false).
GradCheckReport grad_check(const ScalarFn& f, const Tensor<double>& x, const GradCheckOptions& opts = {});

}  // namespace loaa
