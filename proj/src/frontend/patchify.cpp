// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/frontend/patchify.hpp"

#include <string>

#include "loaa/core/error.hpp"

namespace loaa {

Tensor<float> patchify(const Tensor<float>& mel, std::size_t p, float pad_value) {
  if (mel.rank() != 2) throw DimensionError("patchify: expected [F x T], got " + shape_str(mel.shape()));
  if (p == 0) throw ConfigError("patchify: patch size must be positive");
  const std::size_t F = mel.dim(0), T = mel.dim(1);
  if (F % p != 0) {
    throw ConfigError("patchify: " + std::to_string(F) + " mel bands not divisible by patch " + std::to_string(p));
  }
  const std::size_t Fp = F / p, Tp = (T + p - 1) / p;
  if (Tp == 0) throw ConfigError("patchify: spectrogram has no frames");
  Tensor<float> out({Fp, Tp, p * p});
  auto o = out.mutable_values();
  const auto src = mel.values();
  for (std::size_t fp = 0; fp < Fp; ++fp)
    for (std::size_t tp = 0; tp < Tp; ++tp) {
      float* patch = o.data() + (fp * Tp + tp) * p * p;
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
          const std::size_t f = fp * p + i, t = tp * p + j;
          patch[i * p + j] = t < T ? src[f * T + t] : pad_value;
        }
    }
  return out;
}

Tensor<float> patchify(const MelSpectrogram& mel, std::size_t p) { return patchify(mel.values, p, mel.floor_value); }

Tensor<float> unpatchify(const Tensor<float>& grid, std::size_t p) {
  if (grid.rank() != 3 || grid.dim(2) != p * p) {
    throw DimensionError("unpatchify: expected [F_p x T_p x " + std::to_string(p * p) + "], got " +
                         shape_str(grid.shape()));
  }
  const std::size_t Fp = grid.dim(0), Tp = grid.dim(1), F = Fp * p, T = Tp * p;
  Tensor<float> out({F, T});
  auto o = out.mutable_values();
  const auto src = grid.values();
  for (std::size_t fp = 0; fp < Fp; ++fp)
    for (std::size_t tp = 0; tp < Tp; ++tp) {
      const float* patch = src.data() + (fp * Tp + tp) * p * p;
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) o[(fp * p + i) * T + tp * p + j] = patch[i * p + j];
    }
  return out;
}

}  // namespace loaa
