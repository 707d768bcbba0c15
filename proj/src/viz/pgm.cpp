// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/viz/pgm.hpp"

#include <cctype>
#include <string>

#include "loaa/core/error.hpp"
#include "loaa/core/fileio.hpp"

namespace loaa {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> b) : b_(b) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > (std::size_t{1} << 32)) throw LoadError(std::string("pgm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw LoadError(std::string("pgm: missing ") + what + " at offset " + std::to_string(start));
    return v;
  }

  std::size_t pos_ = 0;

 private:
  std::span<const std::uint8_t> b_;
};

}  // namespace

void PgmImage::validate() const {
  if (width == 0 || height == 0) throw ValidationError("pgm: empty image");
  if (pixels.size() != width * height) {
    throw ValidationError("pgm: " + std::to_string(width) + "x" + std::to_string(height) + " image holds " +
                          std::to_string(pixels.size()) + " pixels");
  }
}

std::vector<std::uint8_t> encode_pgm(const PgmImage& img) {
  img.validate();
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

PgmImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw LoadError("pgm: missing P5 magic");
  HeaderReader r(bytes.subspan(2));
  PgmImage img;
  img.width = r.number("width");
  img.height = r.number("height");
  const auto maxval = r.number("maxval");
  if (maxval != 255) throw LoadError("pgm: only maxval 255 is supported, got " + std::to_string(maxval));
  const std::size_t data = 2 + r.pos_;
  if (data >= bytes.size() || !std::isspace(bytes[data])) throw LoadError("pgm: truncated header");
  const std::size_t n = img.width * img.height;
  if (img.width == 0 || img.height == 0) throw LoadError("pgm: empty image");
  if (bytes.size() - data - 1 != n) {
    throw LoadError("pgm: header promises " + std::to_string(n) + " pixels, file holds " +
                    std::to_string(bytes.size() - data - 1));
  }
  img.pixels.assign(bytes.begin() + static_cast<long>(data + 1), bytes.end());
  return img;
}

void write_pgm(const std::filesystem::path& path, const PgmImage& img) { write_file_atomic(path, encode_pgm(img)); }

PgmImage read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file_bytes(path)); }

}  // namespace loaa
