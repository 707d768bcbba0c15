// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace loaa {

// 8-bit grayscale image, row-major from the top-left pixel.
struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  // Throws ValidationError when the buffer does not match the dimensions.
  void validate() const;
};

// Binary "P5" with maxval 255.
std::vector<std::uint8_t> encode_pgm(const PgmImage& img);
// Accepts header comments and any whitespace between header fields. Throws
// LoadError on malformed input.
PgmImage decode_pgm(std::span<const std::uint8_t> bytes);

void write_pgm(const std::filesystem::path& path, const PgmImage& img);
PgmImage read_pgm(const std::filesystem::path& path);

}  // namespace loaa
