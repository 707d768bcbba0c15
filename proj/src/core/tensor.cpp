// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/core/tensor.hpp"

#include <atomic>
#include <cstring>
#include <sstream>

namespace loaa {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::string_view op_name(OpTag op) {
  switch (op) {
    case OpTag::leaf: return "leaf";
    case OpTag::matmul: return "matmul";
    case OpTag::matmul_nt: return "matmul_nt";
    case OpTag::transpose: return "transpose";
    case OpTag::add: return "add";
    case OpTag::mul: return "mul";
    case OpTag::scale: return "scale";
    case OpTag::add_rowvec: return "add_rowvec";
    case OpTag::sum: return "sum";
    case OpTag::gelu: return "gelu";
    case OpTag::softmax: return "softmax";
    case OpTag::layer_norm: return "layer_norm";
    case OpTag::conv_grid: return "conv_grid";
    case OpTag::cross_entropy: return "cross_entropy";
    case OpTag::reshape: return "reshape";
    case OpTag::slice_rows: return "slice_rows";
    case OpTag::concat_rows: return "concat_rows";
    case OpTag::slice_cols: return "slice_cols";
    case OpTag::concat_cols: return "concat_cols";
  }
  return "unknown";
}

namespace detail {

std::uint64_t next_seq() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

}  // namespace detail

template <typename T>
Tensor<T>::Tensor() : Tensor(Shape{0}) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad)
    : Tensor(shape, std::vector<T>(shape_numel(shape), T(0)), requires_grad) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<detail::Node<T>>()) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor: shape " + shape_str(shape) + " holds " +
                         std::to_string(shape_numel(shape)) + " elements, got " +
                         std::to_string(values.size()));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
  node_->seq = detail::next_seq();
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T v, bool requires_grad) {
  return Tensor(Shape{}, std::vector<T>{v}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T v, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, v), requires_grad);
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("tensor: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(shape()));
  }
  return node_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw DimensionError("item(): tensor " + shape_str(shape()) + " is not a scalar");
  return node_->value[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  if (!is_leaf()) throw UsageError("set_requires_grad: only leaf tensors can change grad mode");
  node_->requires_grad = on;
  if (!on) node_->grad.clear();
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->value, false);
}

template <typename T>
Tensor<T> Tensor<T>::from_node(std::shared_ptr<detail::Node<T>> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x) {
  std::vector<To> v(x.values().begin(), x.values().end());
  return Tensor<To>(x.shape(), std::move(v), false);
}

template <typename T>
bool bit_equal(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.values().data(), b.values().data(), a.numel() * sizeof(T)) == 0;
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> cast<float, double>(const Tensor<double>&);
template Tensor<double> cast<double, float>(const Tensor<float>&);
template Tensor<float> cast<float, float>(const Tensor<float>&);
template Tensor<double> cast<double, double>(const Tensor<double>&);
template bool bit_equal<float>(const Tensor<float>&, const Tensor<float>&);
template bool bit_equal<double>(const Tensor<double>&, const Tensor<double>&);

}  // namespace loaa
