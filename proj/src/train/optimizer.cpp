// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/train/optimizer.hpp"

#include <cmath>
#include <string>

#include "loaa/core/error.hpp"

namespace loaa {

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "adamw"; }

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "adam") return OptimizerKind::adam;
  if (text == "adamw") return OptimizerKind::adamw;
  throw ConfigError("unknown optimizer '" + std::string(text) + "'; valid options: adam, adamw");
}

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState& state, const OptimizerConfig& cfg) {
  if (state.m.empty() && state.t == 0) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].numel(), 0.0);
      state.v[i].assign(params[i].numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam: state tracks " + std::to_string(state.m.size()) + " tensors, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].numel() || state.v[i].size() != params[i].numel()) {
      throw DimensionError("adam: state for tensor " + std::to_string(i) + " has " + std::to_string(state.m[i].size()) +
                           " entries, tensor has " + std::to_string(params[i].numel()));
    }
  }

  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const bool decoupled = cfg.kind == OptimizerKind::adamw;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.requires_grad()) continue;
    auto w = p.mutable_values();
    const bool has_grad = p.has_grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      double g = has_grad ? static_cast<double>(p.grad()[k]) : 0.0;
      double x = w[k];
      if (decoupled) x -= cfg.lr * cfg.weight_decay * x;
      else g += cfg.weight_decay * x;
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[k] / bc1, vhat = v[k] / bc2;
      x -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      w[k] = static_cast<T>(x);
    }
  }
}

template void adam_step<float>(std::vector<Tensor<float>>&, AdamState&, const OptimizerConfig&);
template void adam_step<double>(std::vector<Tensor<double>>&, AdamState&, const OptimizerConfig&);

}  // namespace loaa
