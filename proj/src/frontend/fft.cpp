// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/frontend/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "loaa/core/error.hpp"

namespace loaa {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw ValidationError("fft: length " + std::to_string(n) + " is not a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles computed directly per index keep rounding error from
    // accumulating across a stage.
    std::vector<std::complex<double>> tw(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      tw[k] = {std::cos(ang), std::sin(ang)};
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + half] * tw[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

std::vector<std::complex<double>> fft(std::vector<std::complex<double>> data) {
  fft_inplace(data);
  return data;
}

}  // namespace loaa
