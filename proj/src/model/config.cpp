// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/model/config.hpp"

#include "loaa/core/error.hpp"
#include "loaa/model/backbone.hpp"

namespace loaa {

void BackboneConfig::validate() const {
  if (d == 0 || n_layers == 0 || n_heads == 0 || mlp_ratio == 0 || n_classes == 0 || patch_dim == 0) {
    throw ConfigError("backbone config: all extents must be positive");
  }
  if (d % n_heads != 0) {
    throw ConfigError("backbone config: d=" + std::to_string(d) + " not divisible by n_heads=" +
                      std::to_string(n_heads));
  }
  if (grid.freq == 0 || grid.time == 0) throw ConfigError("backbone config: empty token grid");
}

BackboneConfig preset_config(std::string_view name) {
  BackboneConfig c;
  if (name == "tiny") {
    c.d = 64;
    c.n_layers = 4;
    c.n_heads = 4;
    c.mlp_ratio = 4;
    c.grid = {8, 8};
    c.n_classes = 4;
  } else if (name == "base") {
    c.d = 768;
    c.n_layers = 12;
    c.n_heads = 12;
    c.mlp_ratio = 4;
    c.grid = {8, 64};
    c.n_classes = 44;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (valid: tiny, base)");
  }
  return c;
}

std::size_t backbone_census(const BackboneConfig& c) {
  const std::size_t d = c.d, h = c.hidden();
  const std::size_t stem = c.patch_dim * d + d + d + c.n_tokens() * d;
  const std::size_t layer = 2 * d + (d * 3 * d + 3 * d) + (d * d + d) + 2 * d + (d * h + h) + (h * d + d);
  return stem + c.n_layers * layer + 2 * d;
}

std::size_t head_census(const BackboneConfig& c) { return c.d * c.n_classes + c.n_classes; }

}  // namespace loaa
