// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/core/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace loaa {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("Rng::below: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  // Box-Muller, one value per call so the stream position depends only on
  // the number of calls.
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::truncated_normal(double stddev) {
  double z;
  do {
    z = normal();
  } while (std::abs(z) > 2.0);
  return z * stddev;
}

double Rng::gamma(double shape) {
  if (!(shape > 0)) throw ValidationError("Rng::gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape+1 and rescale (Marsaglia-Tsang).
    const double u = uniform();
    return gamma(shape + 1.0) * std::pow(u > 0 ? u : 0x1.0p-53, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  shuffle(p.begin(), p.end());
  return p;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename T>
Tensor<T> random_normal(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.normal() * stddev);
  return Tensor<T>(std::move(shape), std::move(v), requires_grad);
}

template <typename T>
Tensor<T> random_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return Tensor<T>(std::move(shape), std::move(v), requires_grad);
}

template <typename T>
Tensor<T> random_truncated_normal(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.truncated_normal(stddev));
  return Tensor<T>(std::move(shape), std::move(v), requires_grad);
}

template Tensor<float> random_normal<float>(Shape, Rng&, double, bool);
template Tensor<double> random_normal<double>(Shape, Rng&, double, bool);
template Tensor<float> random_uniform<float>(Shape, Rng&, double, double, bool);
template Tensor<double> random_uniform<double>(Shape, Rng&, double, double, bool);
template Tensor<float> random_truncated_normal<float>(Shape, Rng&, double, bool);
template Tensor<double> random_truncated_normal<double>(Shape, Rng&, double, bool);

}  // namespace loaa
