// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/train/mixup.hpp"

#include <string>

#include "loaa/core/error.hpp"

namespace loaa {

namespace {

Tensor<float> blend(const Tensor<float>& a, const Tensor<float>& b, double lambda) {
  Tensor<float> out(a.shape());
  auto o = out.mutable_values();
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>(lambda * av[i] + (1.0 - lambda) * bv[i]);
  return out;
}

}  // namespace

MixedBatch mixup_batch(const std::vector<Tensor<float>>& x, const Tensor<float>& y, double alpha, Rng& rng,
                       std::optional<double> forced_lambda) {
  const std::size_t B = x.size();
  if (y.rank() != 2 || y.dim(0) != B) {
    throw DimensionError("mixup: targets " + shape_str(y.shape()) + " for a batch of " + std::to_string(B));
  }
  if (!forced_lambda && !(alpha > 0.0)) throw ConfigError("mixup: alpha must be positive");
  MixedBatch out;
  out.lambda = forced_lambda ? *forced_lambda : rng.beta(alpha, alpha);
  if (out.lambda < 0.0 || out.lambda > 1.0) throw ConfigError("mixup: lambda must lie in [0, 1]");
  out.partner = rng.permutation(B);
  const std::size_t C = y.dim(1);
  out.y = Tensor<float>({B, C});
  auto yv = out.y.mutable_values();
  out.x.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t p = out.partner[b];
    if (x[b].shape() != x[p].shape()) throw DimensionError("mixup: batch members differ in shape");
    out.x.push_back(out.lambda == 1.0 ? x[b] : out.lambda == 0.0 ? x[p] : blend(x[b], x[p], out.lambda));
    for (std::size_t c = 0; c < C; ++c) {
      yv[b * C + c] = static_cast<float>(out.lambda * y[b * C + c] + (1.0 - out.lambda) * y[p * C + c]);
    }
  }
  return out;
}

}  // namespace loaa
