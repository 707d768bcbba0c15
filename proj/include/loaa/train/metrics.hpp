// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "loaa/core/tensor.hpp"

namespace loaa {

// Row argmax with ties going to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor<double>& scores);

// Fraction of rows whose argmax equals the label.
double top1_accuracy(const Tensor<double>& scores, const std::vector<std::size_t>& labels);

struct MapResult {
  double map = 0.0;
  std::vector<double> per_class;            // AP per evaluated class
  std::vector<std::size_t> evaluated;       // class indices behind per_class
  std::vector<std::size_t> skipped;         // classes without positives
};

// Average precision of one ranking: rank by score descending with ties going
// to the lower sample index, then average precision@k over positive ranks.
double average_precision(const std::vector<double>& scores, const std::vector<bool>& positive);

// truth is a binary [N x C] matrix. Classes without positives are skipped;
// throws MetricError when every class is skipped.
MapResult mean_average_precision(const Tensor<double>& scores, const Tensor<double>& truth);

Tensor<double> one_hot(const std::vector<std::size_t>& labels, std::size_t n_classes);

}  // namespace loaa
