// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loaa/core/tensor.hpp"
#include "loaa/model/adapters.hpp"
#include "loaa/model/config.hpp"

namespace loaa {

template <typename T>
struct LayerWeights {
  Tensor<T> ln1_g, ln1_b;
  Tensor<T> qkv_w, qkv_b;    // [d x 3d], [3d]  (q | k | v column blocks)
  Tensor<T> proj_w, proj_b;  // [d x d], [d]
  Tensor<T> ln2_g, ln2_b;
  Tensor<T> fc1_w, fc1_b;  // [d x hidden], [hidden]
  Tensor<T> fc2_w, fc2_b;  // [hidden x d], [d]
};

template <typename T>
struct BackboneWeights {
  Tensor<T> patch_w, patch_b;  // [patch_dim x d], [d]
  Tensor<T> cls;               // [1 x d]
  Tensor<T> pos;               // [n_tokens x d]
  std::vector<LayerWeights<T>> layers;
  Tensor<T> norm_g, norm_b;
};

template <typename T>
struct Model {
  BackboneConfig config;
  BackboneWeights<T> backbone;
  Tensor<T> head_w, head_b;  // [d x n_classes], [n_classes]
  AdapterSet<T> adapters;
};

enum class TrainMode { peft, linear_probe, full_ft };
std::string_view mode_name(TrainMode mode);
TrainMode parse_mode(std::string_view text);

// Random backbone: truncated normal (0.02) weights and embeddings, zero
// biases, unit LayerNorm gains. No adapters.
template <typename T>
Model<T> init_model(const BackboneConfig& cfg, std::uint64_t seed);

template <typename To, typename From>
Model<To> cast_model(const Model<From>& m);

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
  bool backbone = false;  // part of the pretrained encoder (never the head or adapters)
};

// Every parameter in a fixed order: backbone, head, then adapters by layer.
template <typename T>
std::vector<NamedTensor<T>> named_tensors(const Model<T>& m);

// peft: backbone frozen, head + adapters trainable.
// linear_probe: only the head trains.
// full_ft: everything trains.
template <typename T>
void freeze_backbone(Model<T>& m, TrainMode mode = TrainMode::peft);

template <typename T>
std::size_t trainable_count(const Model<T>& m);

// Counted from the formula, not from tensors:
//   patch projection, CLS, positional table, L x (2 LN + qkv + proj + 2 FFN), final LN.
// The classification head is excluded.
std::size_t backbone_census(const BackboneConfig& cfg);
std::size_t head_census(const BackboneConfig& cfg);

// Attention weights [n_heads x N x N] recorded for one layer.
struct AttentionCapture {
  std::size_t layer = 0;
  std::vector<Shape::value_type> shape;
  std::vector<double> weights;
};

// x: [F_p x T_p x patch_dim] -> [(F_p*T_p + 1) x d]
template <typename T>
Tensor<T> patch_embed(const Model<T>& m, const Tensor<T>& x);

// Pre-norm attention block, y = x + MHSA(LN(x)) [+ adapter(LN(x))].
template <typename T>
Tensor<T> attention_block(const Tensor<T>& x, const LayerWeights<T>& w, std::size_t n_heads,
                          const AdapterWeights<T>* adapter, GridShape grid,
                          std::vector<Tensor<T>>* attention_out = nullptr);

// Pre-norm FFN block, y = x + W2 gelu(W1 LN(x)) [+ adapter(LN(x))].
template <typename T>
Tensor<T> ffn_block(const Tensor<T>& x, const LayerWeights<T>& w, const AdapterWeights<T>* adapter,
                    GridShape grid);

// Returns [1 x n_classes] logits read from the CLS token.
template <typename T>
Tensor<T> encoder_forward(const Model<T>& m, const Tensor<T>& patches, AttentionCapture* capture = nullptr);

// Stacks per-sample logits into [B x n_classes].
template <typename T>
Tensor<T> forward_batch(const Model<T>& m, const std::vector<Tensor<T>>& patches);

}  // namespace loaa
