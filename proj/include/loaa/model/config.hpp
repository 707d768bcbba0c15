// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace loaa {

// Patch-token grid: `freq` rows (frequency bands) by `time` columns.
struct GridShape {
  std::size_t freq = 8;
  std::size_t time = 8;

  std::size_t cells() const { return freq * time; }
  bool operator==(const GridShape&) const = default;
};

inline constexpr std::size_t kPatchSize = 16;
inline constexpr std::size_t kPatchDim = kPatchSize * kPatchSize;

struct BackboneConfig {
  std::size_t d = 64;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t mlp_ratio = 4;
  GridShape grid{};
  std::size_t n_classes = 4;
  std::size_t patch_dim = kPatchDim;

  std::size_t hidden() const { return mlp_ratio * d; }
  std::size_t head_dim() const { return d / n_heads; }
  // Patch tokens plus one CLS token.
  std::size_t n_tokens() const { return grid.cells() + 1; }

  // Throws ConfigError on an inconsistent geometry.
  void validate() const;

  bool operator==(const BackboneConfig&) const = default;
};

// base: d=768, 12 layers, 12 heads, 8x64 grid (128 mels x 1024 frames), 44 classes.
// tiny: d=64, 4 layers, 4 heads, 8x8 grid (128 mels x 128 frames), 4 classes.
BackboneConfig preset_config(std::string_view name);

}  // namespace loaa
