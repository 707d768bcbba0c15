// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "loaa/frontend/synth.hpp"

namespace loaa {

enum class Split { train, val, test };

std::string_view split_name(Split s);
Split parse_split(std::string_view text);

struct ManifestEntry {
  std::string id;
  std::size_t label = 0;
  Split split = Split::train;
  SynthSpec synth;
};

struct DatasetManifest {
  std::size_t n_classes = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;
  std::vector<ManifestEntry> entries;

  // Throws ValidationError on out-of-range labels, duplicate ids or
  // overlapping splits.
  void validate() const;
  std::vector<const ManifestEntry*> split(Split s) const;
};

// JSON-lines text: an optional header object carrying "manifest" followed by
// one {"id", "class", "split", "synth"} object per line.
std::string write_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(std::string_view text);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

struct StandardTaskOptions {
  std::size_t n_classes = 4;
  std::size_t clips_per_class = 100;
  double duration = 1.3;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

// Synthetic classification task. Classes in order: low tone, high tone,
// up-chirp, down-chirp, pulse train, band noise. Each class is split
// 80/10/10 into train/val/test.
DatasetManifest standard_manifest(const StandardTaskOptions& opts);

}  // namespace loaa
