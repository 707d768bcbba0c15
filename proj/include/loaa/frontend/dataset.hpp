// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "loaa/core/tensor.hpp"
#include "loaa/frontend/manifest.hpp"
#include "loaa/frontend/spectrogram.hpp"
#include "loaa/model/config.hpp"

namespace loaa {

struct Example {
  std::string id;
  std::size_t label = 0;
  Tensor<float> mel;      // [n_mels x n_frames]
  Tensor<float> patches;  // [F_p x T_p x 256]
};

struct Dataset {
  DatasetManifest manifest;
  FrontendConfig frontend;
  std::vector<Example> train, val, test;
  const std::vector<Example>& split(Split s) const;
  GridShape grid() const;
};

// Frontend settings that produce the given token grid from clips.
FrontendConfig frontend_for_grid(GridShape grid);

// Synthesizes and featurizes every manifest entry in memory.
Dataset build_dataset(const DatasetManifest& manifest, const FrontendConfig& frontend);

// Writes manifest.jsonl, waves.loaa and mels.loaa under out_dir.
void dataset_generate(const DatasetManifest& manifest, const FrontendConfig& frontend,
                      const std::filesystem::path& out_dir);
Dataset dataset_load(const std::filesystem::path& dir);

// Seed-determined shuffled index batches over n examples for one epoch. The
// final batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch);

}  // namespace loaa
