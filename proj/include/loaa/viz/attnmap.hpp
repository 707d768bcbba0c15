// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "loaa/model/backbone.hpp"
#include "loaa/viz/pgm.hpp"

namespace loaa {

struct AttnMapRequest {
  std::optional<std::size_t> layer;  // default: last
  std::size_t t0 = 0;                // key frames [t0, t1)
  std::size_t t1 = 0;
  std::optional<std::size_t> head;  // default: mean over heads
};

struct KeyColumns {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Patch columns [t0/16, ceil(t1/16)). Throws ValidationError unless
// t0 < t1 <= n_frames.
KeyColumns key_columns(std::size_t t0, std::size_t t1, std::size_t n_frames);

// Min-max scaling to [0, 255]; a zero-range input maps to all zeros.
std::vector<std::uint8_t> to_gray(const std::vector<double>& values);

// Each cell of a [rows x cols] map becomes a factor x factor block. Row 0 of
// the map (lowest frequency) lands at the bottom of the image.
PgmImage upscale(const std::vector<std::uint8_t>& cells, std::size_t rows, std::size_t cols, std::size_t factor);

struct AttnMap {
  GridShape grid;
  std::size_t layer = 0;
  std::optional<std::size_t> head;
  std::size_t t0 = 0, t1 = 0;
  KeyColumns columns;
  std::vector<double> cells;  // [F_p x T_p], frequency-major
  double min = 0.0, max = 0.0;
  PgmImage image;
};

// Attention from every patch query to the patch keys in the selected
// columns, averaged over those keys and over heads (or one head).
AttnMap attention_map(const Model<float>& m, const Tensor<float>& patches, const AttnMapRequest& req);

nlohmann::json attnmap_sidecar(const AttnMap& map);

}  // namespace loaa
