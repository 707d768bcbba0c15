// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/viz/attnmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loaa/core/error.hpp"

namespace loaa {

KeyColumns key_columns(std::size_t t0, std::size_t t1, std::size_t n_frames) {
  if (!(t0 < t1) || t1 > n_frames) {
    throw ValidationError("attnmap: key range [" + std::to_string(t0) + ", " + std::to_string(t1) +
                          ") must satisfy t0 < t1 <= " + std::to_string(n_frames));
  }
  return {t0 / kPatchSize, (t1 + kPatchSize - 1) / kPatchSize};
}

std::vector<std::uint8_t> to_gray(const std::vector<double>& values) {
  std::vector<std::uint8_t> out(values.size(), 0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (values[i] - *lo) / range));
  }
  return out;
}

PgmImage upscale(const std::vector<std::uint8_t>& cells, std::size_t rows, std::size_t cols, std::size_t factor) {
  if (cells.size() != rows * cols) throw DimensionError("upscale: cell count does not match the grid");
  PgmImage img{cols * factor, rows * factor, std::vector<std::uint8_t>(rows * cols * factor * factor)};
  for (std::size_t y = 0; y < img.height; ++y) {
    const std::size_t r = rows - 1 - y / factor;
    for (std::size_t x = 0; x < img.width; ++x) img.pixels[y * img.width + x] = cells[r * cols + x / factor];
  }
  return img;
}

AttnMap attention_map(const Model<float>& m, const Tensor<float>& patches, const AttnMapRequest& req) {
  const auto& c = m.config;
  AttnMap out;
  out.grid = c.grid;
  out.layer = req.layer.value_or(c.n_layers - 1);
  if (out.layer >= c.n_layers) {
    throw ValidationError("attnmap: layer " + std::to_string(out.layer) + " out of range (model has " +
                          std::to_string(c.n_layers) + ")");
  }
  if (req.head && *req.head >= c.n_heads) {
    throw ValidationError("attnmap: head " + std::to_string(*req.head) + " out of range (model has " +
                          std::to_string(c.n_heads) + ")");
  }
  out.head = req.head;
  out.t0 = req.t0;
  out.t1 = req.t1;
  out.columns = key_columns(req.t0, req.t1, c.grid.time * kPatchSize);

  AttentionCapture cap;
  cap.layer = out.layer;
  encoder_forward(m, patches, &cap);
  const std::size_t N = c.n_tokens(), F = c.grid.freq, T = c.grid.time;

  std::vector<std::size_t> keys;
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t t = out.columns.begin; t < out.columns.end; ++t) keys.push_back(1 + f * T + t);
  const std::size_t h_begin = req.head.value_or(0);
  const std::size_t h_end = req.head ? *req.head + 1 : c.n_heads;

  out.cells.assign(F * T, 0.0);
  for (std::size_t q = 1; q < N; ++q) {
    double acc = 0.0;
    for (std::size_t h = h_begin; h < h_end; ++h) {
      const double* row = cap.weights.data() + (h * N + q) * N;
      double s = 0.0;
      for (auto k : keys) s += row[k];
      acc += s / static_cast<double>(keys.size());
    }
    out.cells[q - 1] = acc / static_cast<double>(h_end - h_begin);
  }
  const auto [lo, hi] = std::minmax_element(out.cells.begin(), out.cells.end());
  out.min = *lo;
  out.max = *hi;
  out.image = upscale(to_gray(out.cells), F, T, kPatchSize);
  return out;
}

nlohmann::json attnmap_sidecar(const AttnMap& map) {
  return nlohmann::json{
      {"format", "loaa-attnmap"},
      {"version", 1},
      {"width", map.image.width},
      {"height", map.image.height},
      {"grid", {map.grid.freq, map.grid.time}},
      {"layer", map.layer},
      {"heads", map.head ? nlohmann::json(*map.head) : nlohmann::json("mean")},
      {"key_frames", {map.t0, map.t1}},
      {"key_columns", {map.columns.begin, map.columns.end}},
      {"aggregation", "mean over selected patch keys, then over heads; CLS query and key excluded"},
      {"normalization", "min-max to 0..255; zero range gives 0"},
      {"range", {map.min, map.max}},
      {"upscale", kPatchSize},
      {"row_order", "highest frequency first"}};
}

}  // namespace loaa
