// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace loaa {

// Shape or extent disagreement between operands.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration that can never be valid (even kernel extent, bad preset, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that fails a documented precondition.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. calling backward twice on a consumed graph.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No bottleneck width satisfies the requested parameter budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, truncated or mismatched files.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric with no defined value, such as mAP when no class has a positive.
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures while writing outputs.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN or Inf produced by a forward op or a training step.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace loaa
