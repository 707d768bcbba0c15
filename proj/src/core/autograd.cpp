// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/core/autograd.hpp"

#include <algorithm>
#include <unordered_set>

namespace loaa {
namespace debug {
namespace {
std::optional<OpTag> g_fault;
}

ScopedBackwardFault::ScopedBackwardFault(OpTag op) : previous_(g_fault) { g_fault = op; }
ScopedBackwardFault::~ScopedBackwardFault() { g_fault = previous_; }
std::optional<OpTag> active_backward_fault() { return g_fault; }

}  // namespace debug

template <typename T>
void backward(const Tensor<T>& loss) {
  using NodeT = detail::Node<T>;
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  NodeT* root = loss.node().get();
  if (root->consumed) {
    throw UsageError("backward: graph already consumed; rebuild it with a new forward pass");
  }
  if (!root->requires_grad) {
    throw UsageError("backward: loss is detached (no tensor reachable from it requires grad)");
  }

  std::vector<std::shared_ptr<NodeT>> order;
  std::unordered_set<NodeT*> seen;
  std::vector<std::shared_ptr<NodeT>> stack{loss.node()};
  seen.insert(root);
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p);
    }
  }
  // Creation order is a topological order, so reverse creation order visits
  // every consumer before its producers.
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a->seq > b->seq; });

  root->grad_buffer()[0] += T(1);
  const auto fault = debug::active_backward_fault();
  for (auto& n : order) {
    if (!n->backward_fn || n->grad.empty()) continue;
    if (fault && *fault == n->op) {
      for (auto& g : n->grad) g *= T(1.01);
    }
    n->backward_fn(*n);
  }
  for (auto& n : order) {
    if (n->op == OpTag::leaf) continue;
    n->backward_fn = nullptr;
    n->parents.clear();
    if (n.get() != root) std::vector<T>().swap(n->grad);
  }
  root->consumed = true;
}

template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace loaa
