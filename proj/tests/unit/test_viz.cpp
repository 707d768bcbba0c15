// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "loaa/core/error.hpp"
#include "loaa/core/rng.hpp"
#include "loaa/viz/attnmap.hpp"
#include "loaa/viz/pgm.hpp"

using namespace loaa;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

BackboneConfig wide_config() {
  BackboneConfig c;
  c.d = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.mlp_ratio = 2;
  c.grid = {8, 64};
  c.validate();
  return c;
}

Tensor<float> random_patches(const BackboneConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  return random_normal<float>({c.grid.freq, c.grid.time, c.patch_dim}, rng);
}

AttnMapRequest keys(std::size_t t0, std::size_t t1, std::optional<std::size_t> layer = std::nullopt,
                    std::optional<std::size_t> head = std::nullopt) {
  AttnMapRequest r;
  r.t0 = t0;
  r.t1 = t1;
  r.layer = layer;
  r.head = head;
  return r;
}

}  // namespace

TEST(Pgm, EncodeLayout) {
  PgmImage img{3, 2, {0, 1, 2, 253, 254, 255}};
  auto b = encode_pgm(img);
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(b.size(), header.size() + 6);
  EXPECT_EQ(std::string(b.begin(), b.begin() + static_cast<long>(header.size())), header);
  EXPECT_EQ(b.back(), 255);
}

TEST(Pgm, RoundTrip) {
  Rng rng(1);
  PgmImage img{17, 5, {}};
  for (std::size_t i = 0; i < 85; ++i) img.pixels.push_back(static_cast<std::uint8_t>(rng.below(256)));
  auto back = decode_pgm(encode_pgm(img));
  EXPECT_EQ(back.width, 17u);
  EXPECT_EQ(back.height, 5u);
  EXPECT_EQ(back.pixels, img.pixels);
  const auto path = std::filesystem::temp_directory_path() / "loaa_test_roundtrip.pgm";
  write_pgm(path, img);
  EXPECT_EQ(read_pgm(path).pixels, img.pixels);
  std::filesystem::remove(path);
}

TEST(Pgm, HeaderCommentsAndWhitespace) {
  auto b = bytes_of("P5 # made by hand\n2\t1 # w h\n255\n");
  b.push_back(7);
  b.push_back(9);
  auto img = decode_pgm(b);
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.at(1, 0), 9);
}

TEST(Pgm, MalformedInputsAreRejected) {
  EXPECT_THROW(decode_pgm(bytes_of("P2\n1 1\n255\n\x01")), LoadError);
  EXPECT_THROW(decode_pgm(bytes_of("P5\n1 1\n65535\n\x01")), LoadError);
  EXPECT_THROW(decode_pgm(bytes_of("P5\n2 2\n255\n\x01")), LoadError);
  EXPECT_THROW(decode_pgm(bytes_of("P5\nx 2\n255\n\x01")), LoadError);
  EXPECT_THROW(decode_pgm(bytes_of("P5\n1 1\n255")), LoadError);
  EXPECT_THROW(encode_pgm(PgmImage{2, 2, {1, 2, 3}}), ValidationError);
}

TEST(AttnMap, KeyColumnConversion) {
  auto c = key_columns(320, 336, 1024);
  EXPECT_EQ(c.begin, 20u);
  EXPECT_EQ(c.end, 21u);
  c = key_columns(15, 17, 1024);
  EXPECT_EQ(c.begin, 0u);
  EXPECT_EQ(c.end, 2u);
  c = key_columns(0, 1024, 1024);
  EXPECT_EQ(c.end, 64u);
  EXPECT_THROW(key_columns(336, 320, 1024), ValidationError);
  EXPECT_THROW(key_columns(5, 5, 1024), ValidationError);
  EXPECT_THROW(key_columns(1000, 1025, 1024), ValidationError);
}

TEST(AttnMap, GrayScaling) {
  EXPECT_EQ(to_gray({1.0, 2.0, 3.0}), (std::vector<std::uint8_t>{0, 128, 255}));
  EXPECT_EQ(to_gray({-4.0, 0.0}), (std::vector<std::uint8_t>{0, 255}));
  EXPECT_EQ(to_gray({0.25, 0.25, 0.25}), (std::vector<std::uint8_t>{0, 0, 0}));
}

TEST(AttnMap, UpscaleIsNearestNeighbourWithLowFrequencyAtTheBottom) {
  // rows are frequency, row 0 lowest
  const std::vector<std::uint8_t> cells{1, 2, 3, 4, 5, 6};
  auto img = upscale(cells, 2, 3, 4);
  ASSERT_EQ(img.width, 12u);
  ASSERT_EQ(img.height, 8u);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 12; ++x) {
      const std::size_t row = 1 - y / 4, col = x / 4;
      ASSERT_EQ(img.at(x, y), cells[row * 3 + col]) << x << ',' << y;
    }
  }
}

TEST(AttnMap, NativeGeometry) {
  const auto c = wide_config();
  auto m = init_model<float>(c, 2);
  auto map = attention_map(m, random_patches(c, 3), keys(320, 336));
  EXPECT_EQ(map.image.width, 1024u);
  EXPECT_EQ(map.image.height, 128u);
  EXPECT_EQ(map.cells.size(), 8u * 64u);
  EXPECT_EQ(map.columns.begin, 20u);
  EXPECT_EQ(map.columns.end - map.columns.begin, 1u);
  EXPECT_EQ(map.layer, 1u);
  auto meta = attnmap_sidecar(map);
  EXPECT_EQ(meta["key_columns"], nlohmann::json({20, 21}));
  EXPECT_EQ(meta["heads"], "mean");
  EXPECT_EQ(meta["width"], 1024);
}

TEST(AttnMap, MatchesCaptureOracle) {
  BackboneConfig c = wide_config();
  c.grid = {3, 5};
  auto m = init_model<float>(c, 4);
  const auto patches = random_patches(c, 5);
  AttentionCapture cap;
  cap.layer = 0;
  encoder_forward(m, patches, &cap);
  const std::size_t N = c.n_tokens();
  auto weight = [&](std::size_t h, std::size_t q, std::size_t k) { return cap.weights[(h * N + q) * N + k]; };
  for (std::optional<std::size_t> head : {std::optional<std::size_t>{}, std::optional<std::size_t>{1}}) {
    auto map = attention_map(m, patches, keys(20, 48, 0, head));
    ASSERT_EQ(map.columns.begin, 1u);
    ASSERT_EQ(map.columns.end, 3u);
    for (std::size_t f = 0; f < 3; ++f) {
      for (std::size_t t = 0; t < 5; ++t) {
        double expect = 0;
        std::size_t terms = 0;
        for (std::size_t h = 0; h < 2; ++h) {
          if (head && h != *head) continue;
          for (std::size_t kf = 0; kf < 3; ++kf)
            for (std::size_t kt = 1; kt < 3; ++kt, ++terms) expect += weight(h, 1 + f * 5 + t, 1 + kf * 5 + kt);
        }
        EXPECT_NEAR(map.cells[f * 5 + t], expect / terms, 1e-12);
      }
    }
  }
}

TEST(AttnMap, UniformAttentionGivesBlackImage) {
  const auto c = wide_config();
  auto m = init_model<float>(c, 6);
  auto& w = m.backbone.layers.back();
  // Zero query and key projections make every score equal.
  auto qkv = w.qkv_w.mutable_values();
  for (std::size_t i = 0; i < c.d; ++i)
    for (std::size_t j = 0; j < 2 * c.d; ++j) qkv[i * 3 * c.d + j] = 0.0f;
  auto qb = w.qkv_b.mutable_values();
  for (std::size_t j = 0; j < 2 * c.d; ++j) qb[j] = 0.0f;
  auto map = attention_map(m, random_patches(c, 7), keys(0, 16));
  EXPECT_EQ(map.min, map.max);
  for (auto p : map.image.pixels) ASSERT_EQ(p, 0);
}

TEST(AttnMap, RequestValidation) {
  const auto c = wide_config();
  auto m = init_model<float>(c, 8);
  const auto x = random_patches(c, 9);
  EXPECT_THROW(attention_map(m, x, keys(0, 2000)), ValidationError);
  EXPECT_THROW(attention_map(m, x, keys(0, 16, 2)), ValidationError);
  EXPECT_THROW(attention_map(m, x, keys(0, 16, std::nullopt, 2)), ValidationError);
}

TEST(AttnMap, Deterministic) {
  const auto c = wide_config();
  auto m = init_model<float>(c, 10);
  const auto x = random_patches(c, 11);
  EXPECT_EQ(encode_pgm(attention_map(m, x, keys(100, 200)).image),
            encode_pgm(attention_map(m, x, keys(100, 200)).image));
}
