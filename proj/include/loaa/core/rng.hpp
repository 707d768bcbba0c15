// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "loaa/core/tensor.hpp"

namespace loaa {

// Seeded generator with platform-independent transforms. std::mt19937_64's
// raw output is fully specified by the standard; the std:: distributions are
// not, so every transform here is written out.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n);
  double normal();
  // Normal(0, stddev) redrawn until |z| <= 2 stddev.
  double truncated_normal(double stddev);
  double gamma(double shape);
  double beta(double a, double b);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::swap(first[static_cast<long>(i - 1)], first[static_cast<long>(j)]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

template <typename T>
Tensor<T> random_normal(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);

template <typename T>
Tensor<T> random_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false);

template <typename T>
Tensor<T> random_truncated_normal(Shape shape, Rng& rng, double stddev, bool requires_grad = false);

}  // namespace loaa
