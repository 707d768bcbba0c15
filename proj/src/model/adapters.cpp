// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/model/adapters.hpp"

#include <cctype>

#include "loaa/core/ops.hpp"

namespace loaa {

std::string KernelShape::label() const {
  if (*this == kLinearKernel) return "L";
  if (*this == kTimeKernel) return "T";
  if (*this == kFreqKernel) return "F";
  return "(" + std::to_string(kf) + "," + std::to_string(kt) + ")";
}

KernelShape KernelShape::parse(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')') s.push_back(c);
  }
  if (s == "L" || s == "l") return kLinearKernel;
  if (s == "T" || s == "t") return kTimeKernel;
  if (s == "F" || s == "f") return kFreqKernel;
  for (char sep : {',', 'x', 'X'}) {
    const auto pos = s.find(sep);
    if (pos == std::string::npos) continue;
    const std::string a = s.substr(0, pos), b = s.substr(pos + 1);
    if ((a == "1" || a == "3") && (b == "1" || b == "3")) {
      return KernelShape{static_cast<std::size_t>(a[0] - '0'), static_cast<std::size_t>(b[0] - '0')};
    }
  }
  throw ConfigError("unknown kernel shape '" + std::string(text) + "' (valid: L, T, F, (1,1), (1,3), (3,1), (3,3))");
}

std::string_view block_name(BlockKind kind) { return kind == BlockKind::attn ? "attn" : "ffn"; }

void AdapterConfig::validate(std::size_t d) const {
  if (!attn_kernel && !ffn_kernel) throw ConfigError("adapter config: no placement (attn or ffn) selected");
  if (r < 1 || r >= d) {
    throw ConfigError("adapter config: bottleneck r=" + std::to_string(r) + " must satisfy 1 <= r < d=" +
                      std::to_string(d));
  }
}

namespace {

std::string placement_label(std::string_view block, KernelShape k) {
  const auto name = k.label();
  return std::string(block) + (name.front() == '(' ? name : "(" + name + ")");
}

}  // namespace

std::string AdapterConfig::label() const {
  std::string out;
  if (attn_kernel) out += placement_label("Attn", *attn_kernel);
  if (ffn_kernel) {
    if (!out.empty()) out += ' ';
    out += placement_label("FFN", *ffn_kernel);
  }
  return out;
}

template <typename T>
AdapterWeights<T> init_adapter(KernelShape kernel, std::size_t d, std::size_t r, Rng& rng) {
  AdapterWeights<T> w;
  w.kernel = kernel;
  w.down_w = random_truncated_normal<T>({kernel.kf, kernel.kt, d, r}, rng, 0.02, true);
  w.down_b = Tensor<T>({r}, true);
  w.up_w = Tensor<T>({kernel.kf, kernel.kt, r, d}, true);
  w.up_b = Tensor<T>({d}, true);
  return w;
}

template <typename T>
GridSplit<T> tokens_to_grid(const Tensor<T>& tokens, GridShape grid) {
  if (tokens.rank() != 2 || tokens.dim(0) != grid.cells() + 1) {
    throw DimensionError("tokens_to_grid: " + shape_str(tokens.shape()) + " does not hold " +
                         std::to_string(grid.cells()) + " patch tokens + CLS");
  }
  const std::size_t d = tokens.dim(1);
  GridSplit<T> out;
  out.cls = reshape(slice_rows(tokens, 0, 1), {d});
  out.grid = reshape(slice_rows(tokens, 1, grid.cells()), {grid.freq, grid.time, d});
  return out;
}

template <typename T>
Tensor<T> grid_to_tokens(const Tensor<T>& grid, const Tensor<T>& cls) {
  if (grid.rank() != 3 || cls.numel() != grid.dim(2)) {
    throw DimensionError("grid_to_tokens: grid " + shape_str(grid.shape()) + " with cls " + shape_str(cls.shape()));
  }
  const std::size_t d = grid.dim(2);
  return concat_rows<T>({reshape(cls, {1, d}), reshape(grid, {grid.dim(0) * grid.dim(1), d})});
}

template <typename T>
Tensor<T> adapter_forward(const Tensor<T>& h, const AdapterWeights<T>& w, GridShape grid) {
  if (h.rank() != 2 || h.dim(1) != w.d()) {
    throw DimensionError("adapter_forward: input " + shape_str(h.shape()) + " vs adapter width " +
                         std::to_string(w.d()));
  }
  const std::size_t d = w.d();
  auto split = tokens_to_grid(h, grid);
  auto z = gelu(conv_grid(split.grid, w.down_w, w.down_b));
  auto u = conv_grid(z, w.up_w, w.up_b);
  return concat_rows<T>({Tensor<T>({1, d}), reshape(u, {grid.cells(), d})});
}

template <typename T>
Tensor<T> linear_adapter_forward(const Tensor<T>& h, const Tensor<T>& down_w, const Tensor<T>& down_b,
                                 const Tensor<T>& up_w, const Tensor<T>& up_b, bool zero_cls) {
  auto delta = add_rowvec(matmul(gelu(add_rowvec(matmul(h, down_w), down_b)), up_w), up_b);
  if (!zero_cls) return delta;
  const std::size_t n = h.dim(0), d = h.dim(1);
  return concat_rows<T>({Tensor<T>({1, d}), slice_rows(delta, 1, n - 1)});
}

template <typename T>
void AdapterSet<T>::attach(BlockKind kind, std::size_t layer, AdapterWeights<T> weights) {
  if (layer >= layers_.size()) {
    throw ConfigError("attach: layer " + std::to_string(layer) + " does not exist (model has " +
                      std::to_string(layers_.size()) + ")");
  }
  auto& slot = kind == BlockKind::attn ? layers_[layer].attn : layers_[layer].ffn;
  if (slot) {
    throw ConfigError("attach: layer " + std::to_string(layer) + " " + std::string(block_name(kind)) +
                      " block already has an adapter");
  }
  slot = std::move(weights);
}

template <typename T>
void AdapterSet<T>::attach_all(const AdapterConfig& cfg, std::size_t d, std::uint64_t seed) {
  cfg.validate(d);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (cfg.attn_kernel) {
      Rng rng(derive_seed(seed, 2 * l));
      attach(BlockKind::attn, l, init_adapter<T>(*cfg.attn_kernel, d, cfg.r, rng));
    }
    if (cfg.ffn_kernel) {
      Rng rng(derive_seed(seed, 2 * l + 1));
      attach(BlockKind::ffn, l, init_adapter<T>(*cfg.ffn_kernel, d, cfg.r, rng));
    }
  }
}

template <typename T>
const AdapterWeights<T>* AdapterSet<T>::get(BlockKind kind, std::size_t layer) const {
  if (layer >= layers_.size()) return nullptr;
  const auto& slot = kind == BlockKind::attn ? layers_[layer].attn : layers_[layer].ffn;
  return slot ? &*slot : nullptr;
}

template <typename T>
AdapterWeights<T>* AdapterSet<T>::get(BlockKind kind, std::size_t layer) {
  if (layer >= layers_.size()) return nullptr;
  auto& slot = kind == BlockKind::attn ? layers_[layer].attn : layers_[layer].ffn;
  return slot ? &*slot : nullptr;
}

template <typename T>
std::size_t AdapterSet<T>::n_instances() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += (l.attn ? 1 : 0) + (l.ffn ? 1 : 0);
  return n;
}

std::size_t site_weight_count(KernelShape kernel, std::size_t d, std::size_t r) {
  return kernel.area() * d * r * 2;
}

std::size_t site_param_count(KernelShape kernel, std::size_t d, std::size_t r) {
  return site_weight_count(kernel, d, r) + r + d;
}

std::size_t param_count(const AdapterConfig& cfg, const BackboneConfig& backbone, bool include_head) {
  std::size_t per_layer = 0;
  if (cfg.attn_kernel) per_layer += site_param_count(*cfg.attn_kernel, backbone.d, cfg.r);
  if (cfg.ffn_kernel) per_layer += site_param_count(*cfg.ffn_kernel, backbone.d, cfg.r);
  std::size_t total = per_layer * backbone.n_layers;
  if (include_head) total += backbone.d * backbone.n_classes + backbone.n_classes;
  return total;
}

BudgetSolution budget_solve_r(double target_fraction, std::optional<KernelShape> attn_kernel,
                              std::optional<KernelShape> ffn_kernel, const BackboneConfig& backbone,
                              std::size_t census) {
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
    throw BudgetError("budget: target fraction must lie in (0, 1), got " + std::to_string(target_fraction));
  }
  if (!attn_kernel && !ffn_kernel) throw ConfigError("budget: no placement selected");
  const double budget = target_fraction * static_cast<double>(census);
  AdapterConfig cfg{attn_kernel, ffn_kernel, 1};
  auto count = [&](std::size_t r) {
    cfg.r = r;
    return param_count(cfg, backbone, false);
  };
  if (static_cast<double>(count(1)) > budget) {
    throw BudgetError("budget: " + std::to_string(target_fraction) + " of " + std::to_string(census) +
                      " parameters cannot fit an r=1 adapter (" + std::to_string(count(1)) + " parameters)");
  }
  // count(r) is strictly increasing, so bisect on the last r that fits.
  std::size_t lo = 1, hi = backbone.d - 1;
  if (static_cast<double>(count(hi)) <= budget) {
    lo = hi;
  } else {
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (static_cast<double>(count(mid)) <= budget) lo = mid;
      else hi = mid;
    }
  }
  BudgetSolution sol;
  sol.r = lo;
  sol.adapter_params = count(lo);
  sol.fraction = static_cast<double>(sol.adapter_params) / static_cast<double>(census);
  return sol;
}

std::string adapter_tensor_name(std::size_t layer, BlockKind kind, std::string_view proj, std::string_view field) {
  return "adapter.L" + std::to_string(layer) + "." + std::string(block_name(kind)) + "." + std::string(proj) + "." +
         std::string(field);
}

#define LOAA_INSTANTIATE_ADAPTERS(T)                                                                        \
  template AdapterWeights<T> init_adapter<T>(KernelShape, std::size_t, std::size_t, Rng&);                  \
  template GridSplit<T> tokens_to_grid<T>(const Tensor<T>&, GridShape);                                     \
  template Tensor<T> grid_to_tokens<T>(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> adapter_forward<T>(const Tensor<T>&, const AdapterWeights<T>&, GridShape);             \
  template Tensor<T> linear_adapter_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                               const Tensor<T>&, const Tensor<T>&, bool);                   \
  template class AdapterSet<T>;

LOAA_INSTANTIATE_ADAPTERS(float)
LOAA_INSTANTIATE_ADAPTERS(double)

#undef LOAA_INSTANTIATE_ADAPTERS

}  // namespace loaa
