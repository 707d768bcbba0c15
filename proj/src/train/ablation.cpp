// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/train/ablation.hpp"

#include <cstdio>
#include <sstream>

#include "loaa/core/error.hpp"
#include "loaa/core/rng.hpp"

namespace loaa {

namespace {

AdapterConfig cell_config(const AblationCell& c, std::size_t r) { return {c.attn_kernel, c.ffn_kernel, r}; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

AblationPlan kernel_plan(std::string_view placement, double budget) {
  if (placement != "attn" && placement != "ffn") {
    throw ConfigError("ablation: placement must be attn or ffn, got '" + std::string(placement) + "'");
  }
  const bool attn = placement == "attn";
  AblationPlan plan;
  for (KernelShape k : {kLinearKernel, kFreqKernel, kTimeKernel, kSquareKernel}) {
    AblationCell c;
    c.attn_kernel = attn ? std::optional(k) : std::nullopt;
    c.ffn_kernel = attn ? std::nullopt : std::optional(k);
    c.name = cell_config(c, 1).label();
    c.budget = budget;
    plan.cells.push_back(c);
  }
  return plan;
}

AblationPlan combination_plan(double budget) {
  AblationPlan plan;
  const std::pair<KernelShape, KernelShape> combos[] = {{kLinearKernel, kLinearKernel},
                                                        {kTimeKernel, kTimeKernel},
                                                        {kFreqKernel, kFreqKernel},
                                                        {kTimeKernel, kFreqKernel},
                                                        {kFreqKernel, kTimeKernel}};
  for (auto [a, f] : combos) {
    AblationCell c{"", a, f, budget};
    c.name = cell_config(c, 1).label();
    plan.cells.push_back(c);
  }
  return plan;
}

std::size_t matched_r(const AblationCell& cell, const BackboneConfig& backbone, std::size_t census) {
  const std::size_t a_area = cell.attn_kernel ? cell.attn_kernel->area() : 0;
  const std::size_t f_area = cell.ffn_kernel ? cell.ffn_kernel->area() : 0;
  if (a_area && f_area && a_area != f_area) {
    return budget_solve_r(cell.budget, cell.attn_kernel, cell.ffn_kernel, backbone, census).r;
  }
  const std::size_t area = a_area ? a_area : f_area;
  const auto ref = budget_solve_r(cell.budget, cell.attn_kernel ? std::optional(kTimeKernel) : std::nullopt,
                                  cell.ffn_kernel ? std::optional(kTimeKernel) : std::nullopt, backbone, census);
  const std::size_t r = ref.r * kTimeKernel.area() / area;
  if (r < 1) {
    throw BudgetError("ablation: budget " + fmt(cell.budget) + " leaves no channel for kernel area " +
                      std::to_string(area) + " (kernel-3 r = " + std::to_string(ref.r) + ")");
  }
  if (r >= backbone.d) throw BudgetError("ablation: matched r " + std::to_string(r) + " reaches the width");
  return r;
}

std::vector<AblationRow> run_ablation(const AblationPlan& plan, const Dataset& data, const AblationContext& ctx,
                                      const std::function<void(const AblationRow&)>& on_row) {
  std::vector<AblationRow> rows;
  const std::size_t census = backbone_census(ctx.backbone);
  for (std::size_t ci = 0; ci < plan.cells.size(); ++ci) {
    const auto& cell = plan.cells[ci];
    for (auto seed : plan.seeds) {
      AblationRow row;
      row.cell = cell.name;
      row.seed = seed;
      try {
        row.r = matched_r(cell, ctx.backbone, census);
        const auto acfg = cell_config(cell, row.r);
        row.trainable_params = param_count(acfg, ctx.backbone, true);
        row.fraction = static_cast<double>(row.trainable_params) / static_cast<double>(census);
        auto model = ctx.make_model(seed);
        model.adapters.attach_all(acfg, ctx.backbone.d, derive_seed(seed, 0xADA0 + ci));
        auto tc = ctx.train;
        tc.seed = seed;
        tc.mode = TrainMode::peft;
        auto log = train(model, data, tc);
        row.top1 = log.final_val.top1;
        row.map = log.final_val.map;
      } catch (const BudgetError& e) {
        row.error = e.what();
      } catch (const ConfigError& e) {
        row.error = e.what();
      }
      rows.push_back(row);
      if (on_row) on_row(row);
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "cell,r,trainable_params,fraction,top1,map,seed\n";
  for (const auto& r : rows) {
    os << '"' << r.cell << "\",";
    if (r.error.empty()) {
      os << r.r << ',' << r.trainable_params << ',' << fmt(r.fraction) << ',' << fmt(r.top1) << ',' << fmt(r.map);
    } else {
      os << ",,,,";
    }
    os << ',' << r.seed << '\n';
  }
  return os.str();
}

}  // namespace loaa
