// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "loaa/core/rng.hpp"
#include "loaa/core/tensor.hpp"

namespace loaa {

struct MixedBatch {
  std::vector<Tensor<float>> x;
  Tensor<float> y;  // [B x C]
  double lambda = 1.0;
  std::vector<std::size_t> partner;
};

// x' = lambda x + (1 - lambda) x[partner], likewise for y, with one
// lambda ~ Beta(alpha, alpha) per batch and a random partner permutation.
// forced_lambda replaces the draw; the permutation is still drawn.
MixedBatch mixup_batch(const std::vector<Tensor<float>>& x, const Tensor<float>& y, double alpha, Rng& rng,
                       std::optional<double> forced_lambda = std::nullopt);

}  // namespace loaa
