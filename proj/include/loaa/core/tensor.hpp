// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loaa/core/error.hpp"

namespace loaa {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::f32; }
template <>
constexpr DType dtype_of<double>() { return DType::f64; }

// Operation tags recorded on the tape.
enum class OpTag : std::uint8_t {
  leaf,
  matmul,
  matmul_nt,
  transpose,
  add,
  mul,
  scale,
  add_rowvec,
  sum,
  gelu,
  softmax,
  layer_norm,
  conv_grid,
  cross_entropy,
  reshape,
  slice_rows,
  concat_rows,
  slice_cols,
  concat_cols,
};

std::string_view op_name(OpTag op);

namespace detail {

// One tape entry. A node owns its forward value, an optional gradient
// buffer, and (for non-leaf nodes that require grad) the closure that
// pushes its gradient into its parents.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  OpTag op = OpTag::leaf;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  bool consumed = false;

  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

std::uint64_t next_seq();

}  // namespace detail

// Dense row-major tensor handle. Copies share the underlying node; use
// detach() for an independent value copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor();
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor scalar(T v, bool requires_grad = false);
  static Tensor full(Shape shape, T v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->value.size(); }
  static constexpr DType dtype() { return dtype_of<T>(); }

  std::span<const T> values() const { return node_->value; }
  // In-place access for parameter updates between steps. Never call while a
  // graph built from this tensor is still awaiting backward.
  std::span<T> mutable_values() { return node_->value; }
  T item() const;
  T operator[](std::size_t flat) const { return node_->value[flat]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }

  OpTag op() const { return node_->op; }
  bool is_leaf() const { return node_->op == OpTag::leaf; }

  Tensor detach() const;

  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node<T>> node);

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x);

// Element-for-element bit equality of values and shape.
template <typename T>
bool bit_equal(const Tensor<T>& a, const Tensor<T>& b);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace loaa
