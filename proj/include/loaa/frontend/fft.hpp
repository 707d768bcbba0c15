// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace loaa {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// In-place iterative radix-2 decimation-in-time FFT, unnormalized forward
// transform X[k] = sum_n x[n] exp(-2 pi i k n / N). Throws ValidationError
// unless the length is a power of two.
void fft_inplace(std::vector<std::complex<double>>& data);

std::vector<std::complex<double>> fft(std::vector<std::complex<double>> data);

}  // namespace loaa
