// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "loaa/core/tensor.hpp"

namespace loaa {

// Reverse-mode sweep from a scalar loss. Nodes are visited once, in reverse
// creation order; gradients accumulate into every reachable tensor that
// requires grad. The graph is consumed: a second call on the same loss throws
// UsageError until a fresh forward pass rebuilds it.
template <typename T>
void backward(const Tensor<T>& loss);

extern template void backward<float>(const Tensor<float>&);
extern template void backward<double>(const Tensor<double>&);

namespace debug {

// Scales the upstream gradient of every node tagged `op` by 1.01 during
// backward while alive. Used to prove the gradient checker can fail.
class ScopedBackwardFault {
 public:
  explicit ScopedBackwardFault(OpTag op);
  ~ScopedBackwardFault();
  ScopedBackwardFault(const ScopedBackwardFault&) = delete;
  ScopedBackwardFault& operator=(const ScopedBackwardFault&) = delete;

 private:
  std::optional<OpTag> previous_;
};

std::optional<OpTag> active_backward_fault();

}  // namespace debug
}  // namespace loaa
