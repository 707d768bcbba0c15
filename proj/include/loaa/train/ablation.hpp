// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loaa/frontend/dataset.hpp"
#include "loaa/model/adapters.hpp"
#include "loaa/train/trainer.hpp"

namespace loaa {

struct AblationCell {
  std::string name;
  std::optional<KernelShape> attn_kernel;
  std::optional<KernelShape> ffn_kernel;
  double budget = 0.05;
};

struct AblationPlan {
  std::vector<AblationCell> cells;
  std::vector<std::uint64_t> seeds{0};
};

// Kernels L, F, T and (3,3) on one placement ("attn" or "ffn").
AblationPlan kernel_plan(std::string_view placement, double budget);
// Attn(L) FFN(L), Attn(T) FFN(T), Attn(F) FFN(F), Attn(T) FFN(F), Attn(F) FFN(T).
AblationPlan combination_plan(double budget);

// Budget matching: the largest kernel-3 r (same placement) that fits the
// budget is found first, and each cell uses r = 3 r3 / kernel area, so all
// cells share a weight count. Cells whose kernel areas differ between
// placements are solved directly.
std::size_t matched_r(const AblationCell& cell, const BackboneConfig& backbone, std::size_t census);

struct AblationRow {
  std::string cell;
  std::size_t r = 0;
  std::size_t trainable_params = 0;
  double fraction = 0.0;
  double top1 = 0.0;
  double map = 0.0;
  std::uint64_t seed = 0;
  std::string error;  // set when the cell could not run
};

struct AblationContext {
  BackboneConfig backbone;
  // Produces the frozen starting model for a seed; adapters are attached by
  // the runner.
  std::function<Model<float>(std::uint64_t seed)> make_model;
  TrainConfig train;
};

std::vector<AblationRow> run_ablation(const AblationPlan& plan, const Dataset& data, const AblationContext& ctx,
                                      const std::function<void(const AblationRow&)>& on_row = {});

// Header: cell,r,trainable_params,fraction,top1,map,seed
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace loaa
