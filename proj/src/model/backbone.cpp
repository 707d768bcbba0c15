// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/model/backbone.hpp"

#include <cmath>

#include "loaa/core/ops.hpp"
#include "loaa/core/rng.hpp"

namespace loaa {

std::string_view mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::peft: return "peft";
    case TrainMode::linear_probe: return "linear-probe";
    case TrainMode::full_ft: return "full-ft";
  }
  return "?";
}

TrainMode parse_mode(std::string_view text) {
  if (text == "peft") return TrainMode::peft;
  if (text == "linear-probe" || text == "linear_probe") return TrainMode::linear_probe;
  if (text == "full-ft" || text == "full_ft") return TrainMode::full_ft;
  throw ConfigError("unknown mode '" + std::string(text) + "' (valid: peft, linear-probe, full-ft)");
}

template <typename T>
Model<T> init_model(const BackboneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t d = cfg.d, h = cfg.hidden();
  auto weight = [&](Shape s) { return random_truncated_normal<T>(std::move(s), rng, 0.02); };
  auto zeros = [](std::size_t n) { return Tensor<T>({n}); };
  auto ones = [](std::size_t n) { return Tensor<T>::full({n}, T(1)); };

  Model<T> m;
  m.config = cfg;
  auto& b = m.backbone;
  b.patch_w = weight({cfg.patch_dim, d});
  b.patch_b = zeros(d);
  b.cls = weight({1, d});
  b.pos = weight({cfg.n_tokens(), d});
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    LayerWeights<T> lw;
    lw.ln1_g = ones(d);
    lw.ln1_b = zeros(d);
    lw.qkv_w = weight({d, 3 * d});
    lw.qkv_b = zeros(3 * d);
    lw.proj_w = weight({d, d});
    lw.proj_b = zeros(d);
    lw.ln2_g = ones(d);
    lw.ln2_b = zeros(d);
    lw.fc1_w = weight({d, h});
    lw.fc1_b = zeros(h);
    lw.fc2_w = weight({h, d});
    lw.fc2_b = zeros(d);
    b.layers.push_back(std::move(lw));
  }
  b.norm_g = ones(d);
  b.norm_b = zeros(d);
  m.head_w = weight({d, cfg.n_classes});
  m.head_b = zeros(cfg.n_classes);
  m.adapters = AdapterSet<T>(cfg.n_layers);
  return m;
}

template <typename To, typename From>
Model<To> cast_model(const Model<From>& m) {
  auto c = [](const Tensor<From>& t) {
    auto out = cast<To>(t);
    out.set_requires_grad(t.requires_grad());
    return out;
  };
  Model<To> o;
  o.config = m.config;
  const auto& b = m.backbone;
  o.backbone.patch_w = c(b.patch_w);
  o.backbone.patch_b = c(b.patch_b);
  o.backbone.cls = c(b.cls);
  o.backbone.pos = c(b.pos);
  for (const auto& l : b.layers) {
    o.backbone.layers.push_back({c(l.ln1_g), c(l.ln1_b), c(l.qkv_w), c(l.qkv_b), c(l.proj_w), c(l.proj_b),
                                 c(l.ln2_g), c(l.ln2_b), c(l.fc1_w), c(l.fc1_b), c(l.fc2_w), c(l.fc2_b)});
  }
  o.backbone.norm_g = c(b.norm_g);
  o.backbone.norm_b = c(b.norm_b);
  o.head_w = c(m.head_w);
  o.head_b = c(m.head_b);
  o.adapters = AdapterSet<To>(m.config.n_layers);
  for (std::size_t l = 0; l < m.config.n_layers; ++l) {
    for (BlockKind kind : {BlockKind::attn, BlockKind::ffn}) {
      if (const auto* a = m.adapters.get(kind, l)) {
        o.adapters.attach(kind, l, AdapterWeights<To>{a->kernel, c(a->down_w), c(a->down_b), c(a->up_w), c(a->up_b)});
      }
    }
  }
  return o;
}

template <typename T>
std::vector<NamedTensor<T>> named_tensors(const Model<T>& m) {
  std::vector<NamedTensor<T>> out;
  const auto& b = m.backbone;
  auto bb = [&](std::string name, const Tensor<T>& t) { out.push_back({"backbone." + std::move(name), t, true}); };
  bb("patch.w", b.patch_w);
  bb("patch.b", b.patch_b);
  bb("cls", b.cls);
  bb("pos", b.pos);
  for (std::size_t l = 0; l < b.layers.size(); ++l) {
    const auto& w = b.layers[l];
    const std::string p = "L" + std::to_string(l) + ".";
    bb(p + "attn.ln.g", w.ln1_g);
    bb(p + "attn.ln.b", w.ln1_b);
    bb(p + "attn.qkv.w", w.qkv_w);
    bb(p + "attn.qkv.b", w.qkv_b);
    bb(p + "attn.proj.w", w.proj_w);
    bb(p + "attn.proj.b", w.proj_b);
    bb(p + "ffn.ln.g", w.ln2_g);
    bb(p + "ffn.ln.b", w.ln2_b);
    bb(p + "ffn.fc1.w", w.fc1_w);
    bb(p + "ffn.fc1.b", w.fc1_b);
    bb(p + "ffn.fc2.w", w.fc2_w);
    bb(p + "ffn.fc2.b", w.fc2_b);
  }
  bb("norm.g", b.norm_g);
  bb("norm.b", b.norm_b);
  out.push_back({"head.w", m.head_w, false});
  out.push_back({"head.b", m.head_b, false});
  for (std::size_t l = 0; l < m.adapters.n_layers(); ++l) {
    for (BlockKind kind : {BlockKind::attn, BlockKind::ffn}) {
      if (const auto* a = m.adapters.get(kind, l)) {
        out.push_back({adapter_tensor_name(l, kind, "down", "w"), a->down_w, false});
        out.push_back({adapter_tensor_name(l, kind, "down", "b"), a->down_b, false});
        out.push_back({adapter_tensor_name(l, kind, "up", "w"), a->up_w, false});
        out.push_back({adapter_tensor_name(l, kind, "up", "b"), a->up_b, false});
      }
    }
  }
  return out;
}

template <typename T>
void freeze_backbone(Model<T>& m, TrainMode mode) {
  for (auto& nt : named_tensors(m)) {
    bool trainable = true;
    if (nt.backbone) trainable = mode == TrainMode::full_ft;
    else if (nt.name.rfind("adapter.", 0) == 0) trainable = mode != TrainMode::linear_probe;
    nt.tensor.set_requires_grad(trainable);
  }
}

template <typename T>
std::size_t trainable_count(const Model<T>& m) {
  std::size_t n = 0;
  for (const auto& nt : named_tensors(m))
    if (nt.tensor.requires_grad()) n += nt.tensor.numel();
  return n;
}

template <typename T>
Tensor<T> patch_embed(const Model<T>& m, const Tensor<T>& x) {
  const auto& c = m.config;
  if (x.rank() != 3 || x.dim(0) != c.grid.freq || x.dim(1) != c.grid.time || x.dim(2) != c.patch_dim) {
    throw DimensionError("patch_embed: input " + shape_str(x.shape()) + " vs configured grid [" +
                         std::to_string(c.grid.freq) + "x" + std::to_string(c.grid.time) + "x" +
                         std::to_string(c.patch_dim) + "]");
  }
  const auto& b = m.backbone;
  auto flat = reshape(x, {c.grid.cells(), c.patch_dim});
  auto emb = add_rowvec(matmul(flat, b.patch_w), b.patch_b);
  return add(concat_rows<T>({b.cls, emb}), b.pos);
}

template <typename T>
Tensor<T> attention_block(const Tensor<T>& x, const LayerWeights<T>& w, std::size_t n_heads,
                          const AdapterWeights<T>* adapter, GridShape grid, std::vector<Tensor<T>>* attention_out) {
  const std::size_t d = x.dim(1);
  const std::size_t hd = d / n_heads;
  auto h = layer_norm(x, w.ln1_g, w.ln1_b);
  auto qkv = add_rowvec(matmul(h, w.qkv_w), w.qkv_b);
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
  std::vector<Tensor<T>> heads;
  heads.reserve(n_heads);
  for (std::size_t i = 0; i < n_heads; ++i) {
    auto q = slice_cols(qkv, i * hd, hd);
    auto k = slice_cols(qkv, d + i * hd, hd);
    auto v = slice_cols(qkv, 2 * d + i * hd, hd);
    auto attn = softmax(scale(matmul_nt(q, k), inv_sqrt), 1);
    if (attention_out) attention_out->push_back(attn.detach());
    heads.push_back(matmul(attn, v));
  }
  auto mixed = heads.size() == 1 ? heads[0] : concat_cols(heads);
  auto y = add(x, add_rowvec(matmul(mixed, w.proj_w), w.proj_b));
  if (adapter) y = add(y, adapter_forward(h, *adapter, grid));
  return y;
}

template <typename T>
Tensor<T> ffn_block(const Tensor<T>& x, const LayerWeights<T>& w, const AdapterWeights<T>* adapter, GridShape grid) {
  auto h = layer_norm(x, w.ln2_g, w.ln2_b);
  auto hidden = gelu(add_rowvec(matmul(h, w.fc1_w), w.fc1_b));
  auto y = add(x, add_rowvec(matmul(hidden, w.fc2_w), w.fc2_b));
  if (adapter) y = add(y, adapter_forward(h, *adapter, grid));
  return y;
}

template <typename T>
Tensor<T> encoder_forward(const Model<T>& m, const Tensor<T>& patches, AttentionCapture* capture) {
  const auto& c = m.config;
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    for (BlockKind kind : {BlockKind::attn, BlockKind::ffn}) {
      if (const auto* a = m.adapters.get(kind, l); a && a->d() != c.d) {
        throw ConfigError("encoder: adapter at layer " + std::to_string(l) + " has width " + std::to_string(a->d()) +
                          ", backbone width is " + std::to_string(c.d));
      }
    }
  }
  if (capture && capture->layer >= c.n_layers) {
    throw ConfigError("encoder: attention capture layer " + std::to_string(capture->layer) + " out of range");
  }
  auto x = patch_embed(m, patches);
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const auto& w = m.backbone.layers[l];
    std::vector<Tensor<T>> attn;
    const bool grab = capture && capture->layer == l;
    x = attention_block(x, w, c.n_heads, m.adapters.get(BlockKind::attn, l), c.grid, grab ? &attn : nullptr);
    if (grab) {
      const std::size_t n = x.dim(0);
      capture->shape = {c.n_heads, n, n};
      capture->weights.clear();
      capture->weights.reserve(c.n_heads * n * n);
      for (const auto& a : attn) capture->weights.insert(capture->weights.end(), a.values().begin(), a.values().end());
    }
    x = ffn_block(x, w, m.adapters.get(BlockKind::ffn, l), c.grid);
  }
  auto cls = slice_rows(layer_norm(x, m.backbone.norm_g, m.backbone.norm_b), 0, 1);
  return add_rowvec(matmul(cls, m.head_w), m.head_b);
}

template <typename T>
Tensor<T> forward_batch(const Model<T>& m, const std::vector<Tensor<T>>& patches) {
  std::vector<Tensor<T>> rows;
  rows.reserve(patches.size());
  for (const auto& p : patches) rows.push_back(encoder_forward(m, p));
  return concat_rows(rows);
}

#define LOAA_INSTANTIATE_BACKBONE(T)                                                                         \
  template Model<T> init_model<T>(const BackboneConfig&, std::uint64_t);                                     \
  template std::vector<NamedTensor<T>> named_tensors<T>(const Model<T>&);                                    \
  template void freeze_backbone<T>(Model<T>&, TrainMode);                                                    \
  template std::size_t trainable_count<T>(const Model<T>&);                                                  \
  template Tensor<T> patch_embed<T>(const Model<T>&, const Tensor<T>&);                                      \
  template Tensor<T> attention_block<T>(const Tensor<T>&, const LayerWeights<T>&, std::size_t,               \
                                        const AdapterWeights<T>*, GridShape, std::vector<Tensor<T>>*);       \
  template Tensor<T> ffn_block<T>(const Tensor<T>&, const LayerWeights<T>&, const AdapterWeights<T>*,        \
                                  GridShape);                                                                \
  template Tensor<T> encoder_forward<T>(const Model<T>&, const Tensor<T>&, AttentionCapture*);               \
  template Tensor<T> forward_batch<T>(const Model<T>&, const std::vector<Tensor<T>>&);

LOAA_INSTANTIATE_BACKBONE(float)
LOAA_INSTANTIATE_BACKBONE(double)
template Model<double> cast_model<double, float>(const Model<float>&);
template Model<float> cast_model<float, double>(const Model<double>&);

#undef LOAA_INSTANTIATE_BACKBONE

}  // namespace loaa
