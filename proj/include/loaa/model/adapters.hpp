// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loaa/core/rng.hpp"
#include "loaa/core/tensor.hpp"
#include "loaa/model/config.hpp"

namespace loaa {

// Convolution footprint (rows along frequency, columns along time).
struct KernelShape {
  std::size_t kf = 1;
  std::size_t kt = 1;

  std::size_t area() const { return kf * kt; }
  // "L", "T", "F" or "(k_f,k_t)".
  std::string label() const;
  // Accepts L/T/F aliases, "(3,3)", "3x3" and "3,3". Only the four shapes
  // {1,3}x{1,3} are valid.
  static KernelShape parse(std::string_view text);

  bool operator==(const KernelShape&) const = default;
};

inline constexpr KernelShape kLinearKernel{1, 1};
inline constexpr KernelShape kTimeKernel{1, 3};
inline constexpr KernelShape kFreqKernel{3, 1};
inline constexpr KernelShape kSquareKernel{3, 3};

enum class BlockKind { attn, ffn };
std::string_view block_name(BlockKind kind);

struct AdapterConfig {
  std::optional<KernelShape> attn_kernel;
  std::optional<KernelShape> ffn_kernel;
  std::size_t r = 8;

  // Throws ConfigError unless 1 <= r < d and at least one placement is set.
  void validate(std::size_t d) const;
  std::string label() const;  // e.g. "Attn(T) FFN(F)"
};

// Both projections of one adapter site. The (1,1) kernel holds the two
// linear maps of the plain parallel adapter.
template <typename T>
struct AdapterWeights {
  KernelShape kernel;
  Tensor<T> down_w;  // [k_f x k_t x d x r]
  Tensor<T> down_b;  // [r]
  Tensor<T> up_w;    // [k_f x k_t x r x d]
  Tensor<T> up_b;    // [d]

  std::size_t d() const { return down_w.dim(2); }
  std::size_t r() const { return down_w.dim(3); }
};

// Down weights ~ truncated normal(0.02), everything else exactly zero.
template <typename T>
AdapterWeights<T> init_adapter(KernelShape kernel, std::size_t d, std::size_t r, Rng& rng);

template <typename T>
struct GridSplit {
  Tensor<T> grid;  // [F_p x T_p x d]
  Tensor<T> cls;   // [d]
};

// Token i > 0 lands at cell ((i-1) / T_p, (i-1) % T_p); token 0 is CLS.
template <typename T>
GridSplit<T> tokens_to_grid(const Tensor<T>& tokens, GridShape grid);

template <typename T>
Tensor<T> grid_to_tokens(const Tensor<T>& grid, const Tensor<T>& cls);

// Look-Aside adapter delta: conv_up(gelu(conv_down(grid))) on the patch
// grid, zero on CLS. The caller adds it to the block output.
template <typename T>
Tensor<T> adapter_forward(const Tensor<T>& h, const AdapterWeights<T>& w, GridShape grid);

// Plain bottleneck on every token: gelu(h Wd + bd) Wu + bu, with
// Wd [d x r] and Wu [r x d]. When zero_cls is set, row 0 is zeroed so the
// result lines up with adapter_forward's CLS policy.
template <typename T>
Tensor<T> linear_adapter_forward(const Tensor<T>& h, const Tensor<T>& down_w, const Tensor<T>& down_b,
                                 const Tensor<T>& up_w, const Tensor<T>& up_b, bool zero_cls);

template <typename T>
struct LayerAdapters {
  std::optional<AdapterWeights<T>> attn;
  std::optional<AdapterWeights<T>> ffn;
};

// Per-layer, non-shared adapter weights.
template <typename T>
class AdapterSet {
 public:
  AdapterSet() = default;
  explicit AdapterSet(std::size_t n_layers) : layers_(n_layers) {}

  // Throws ConfigError if the site already holds an adapter or the layer
  // does not exist.
  void attach(BlockKind kind, std::size_t layer, AdapterWeights<T> weights);
  // Attaches cfg's kernels to every layer, seeding each site from `seed`.
  void attach_all(const AdapterConfig& cfg, std::size_t d, std::uint64_t seed);

  const AdapterWeights<T>* get(BlockKind kind, std::size_t layer) const;
  AdapterWeights<T>* get(BlockKind kind, std::size_t layer);
  std::size_t n_layers() const { return layers_.size(); }
  std::size_t n_instances() const;
  bool empty() const { return n_instances() == 0; }

 private:
  std::vector<LayerAdapters<T>> layers_;
};

// Parameters of one adapter site, biases included.
std::size_t site_param_count(KernelShape kernel, std::size_t d, std::size_t r);
// Weights of one adapter site, biases excluded.
std::size_t site_weight_count(KernelShape kernel, std::size_t d, std::size_t r);

// All adapter sites across all layers, plus the classification head when
// include_head is set.
std::size_t param_count(const AdapterConfig& cfg, const BackboneConfig& backbone, bool include_head);

struct BudgetSolution {
  std::size_t r = 0;
  std::size_t adapter_params = 0;
  double fraction = 0.0;  // adapter_params / census
};

// Largest r in [1, d) whose adapter parameter count (head excluded) fits
// within target_fraction * census. Throws BudgetError when even r = 1 does
// not fit.
BudgetSolution budget_solve_r(double target_fraction, std::optional<KernelShape> attn_kernel,
                              std::optional<KernelShape> ffn_kernel, const BackboneConfig& backbone,
                              std::size_t census);

std::string adapter_tensor_name(std::size_t layer, BlockKind kind, std::string_view proj, std::string_view field);

}  // namespace loaa
