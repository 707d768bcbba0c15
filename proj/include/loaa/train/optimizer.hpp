// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "loaa/core/tensor.hpp"

namespace loaa {

enum class OptimizerKind { adam, adamw };

std::string_view optimizer_name(OptimizerKind kind);
// Throws ConfigError naming the valid options.
OptimizerKind parse_optimizer(std::string_view text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adamw;
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::size_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// One bias-corrected Adam or AdamW step over params using their gradients.
// Tensors that do not require grad are skipped; a trainable tensor without a
// gradient is treated as having a zero gradient. Adam folds weight decay into
// the gradient, AdamW applies it to the weights directly.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState& state, const OptimizerConfig& cfg);

}  // namespace loaa
