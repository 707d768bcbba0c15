// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "loaa/core/tensor.hpp"
#include "loaa/frontend/spectrogram.hpp"

namespace loaa {

// [F x T] -> [F/p x T'/p x p*p] where T' rounds T up to a multiple of p by
// appending frames filled with pad_value. Patch contents are row-major with
// frequency rows.
Tensor<float> patchify(const Tensor<float>& mel, std::size_t patch, float pad_value);
Tensor<float> patchify(const MelSpectrogram& mel, std::size_t patch = 16);

// Inverse of patchify for an unpadded spectrogram.
Tensor<float> unpatchify(const Tensor<float>& grid, std::size_t patch = 16);

}  // namespace loaa
