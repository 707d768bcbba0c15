// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "loaa/core/tensor.hpp"

namespace loaa {

inline constexpr double kLayerNormEps = 1e-5;

// c[m x n] = a[m x k] * b[k x n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// c[m x n] = a[m x k] * b[n x k]^T. Row-dot-row form used for attention scores.
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise product of equal shapes.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s);

// Adds v (numel == last extent of a) to every trailing row of a.
template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& a, const Tensor<T>& v);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);

// Exact erf-based GELU: x * Phi(x).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

// Normalizes over the last axis, then applies gamma/beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = kLayerNormEps);

// Same-padded cross-correlation over a token grid.
//   x:      [F x T x c_in]
//   kernel: [k_f x k_t x c_in x c_out], k_f and k_t odd
//   bias:   [c_out]
// returns   [F x T x c_out]
template <typename T>
Tensor<T> conv_grid(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias);

// Mean over the batch of -sum_c target * log_softmax(logits). Targets are
// constants; each row must be a probability distribution.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const Tensor<T>& targets);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// Slices/concatenates along axis 0 (any rank).
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);

// Slices/concatenates along axis 1 of 2-D tensors.
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);

}  // namespace loaa
