// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "loaa/model/backbone.hpp"

namespace loaa {

// Named-tensor container shared by model checkpoints and dataset tensor files.
//
// Layout (all integers little-endian):
//   "LOAA" | u32 version (=1) | u32 tensor count
//   per tensor: u16 name length | UTF-8 name | u8 frozen | u8 rank |
//               u64 dims[rank] | u8 dtype (0 = f32) | raw f32 data
//   u32 CRC-32 of every preceding byte
struct CheckpointEntry {
  std::string name;
  bool frozen = false;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(std::string_view name) const;
  void add(std::string name, bool frozen, Shape shape, std::vector<float> data);
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
// Throws LoadError naming the byte offset of the first malformed field.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

// Atomic write (temp file + rename).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// The architecture is echoed in a frozen "meta.config" tensor so a file is
// self-describing; adapter kernels and r are recovered from tensor shapes.
Checkpoint to_checkpoint(const Model<float>& m);
BackboneConfig config_from_checkpoint(const Checkpoint& ckpt);
// Copies every tensor into m after validating names and shapes. On mismatch
// throws LoadError listing every missing, unexpected and mis-shaped tensor.
void load_into(Model<float>& m, const Checkpoint& ckpt);
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

// Backbone-only bytes, used to prove frozen tensors never move.
std::vector<std::uint8_t> backbone_bytes(const Model<float>& m);

}  // namespace loaa
