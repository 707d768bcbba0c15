// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/train/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "loaa/core/error.hpp"

namespace loaa {

std::vector<std::size_t> argmax_rows(const Tensor<double>& scores) {
  if (scores.rank() != 2) throw DimensionError("argmax: expected [N x C], got " + shape_str(scores.shape()));
  const std::size_t N = scores.dim(0), C = scores.dim(1);
  std::vector<std::size_t> out(N, 0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t c = 1; c < C; ++c)
      if (scores[i * C + c] > scores[i * C + out[i]]) out[i] = c;
  return out;
}

double top1_accuracy(const Tensor<double>& scores, const std::vector<std::size_t>& labels) {
  const auto pred = argmax_rows(scores);
  if (pred.size() != labels.size()) {
    throw DimensionError("top1: " + std::to_string(pred.size()) + " rows vs " + std::to_string(labels.size()) +
                         " labels");
  }
  if (pred.empty()) throw MetricError("top1: no samples");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

double average_precision(const std::vector<double>& scores, const std::vector<bool>& positive) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double total = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!positive[order[k]]) continue;
    ++hits;
    total += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  if (hits == 0) throw MetricError("average precision: no positives");
  return total / static_cast<double>(hits);
}

MapResult mean_average_precision(const Tensor<double>& scores, const Tensor<double>& truth) {
  if (scores.rank() != 2 || scores.shape() != truth.shape()) {
    throw DimensionError("mAP: scores " + shape_str(scores.shape()) + " vs truth " + shape_str(truth.shape()));
  }
  const std::size_t N = scores.dim(0), C = scores.dim(1);
  MapResult r;
  std::vector<double> col(N);
  std::vector<bool> pos(N);
  for (std::size_t c = 0; c < C; ++c) {
    bool any = false;
    for (std::size_t i = 0; i < N; ++i) {
      col[i] = scores[i * C + c];
      const double t = truth[i * C + c];
      if (t != 0.0 && t != 1.0) throw ValidationError("mAP: truth must be binary");
      pos[i] = t == 1.0;
      any |= pos[i];
    }
    if (!any) {
      r.skipped.push_back(c);
      continue;
    }
    r.evaluated.push_back(c);
    r.per_class.push_back(average_precision(col, pos));
  }
  if (r.per_class.empty()) throw MetricError("mAP: undefined, no class has a positive sample");
  r.map = std::accumulate(r.per_class.begin(), r.per_class.end(), 0.0) / static_cast<double>(r.per_class.size());
  return r;
}

Tensor<double> one_hot(const std::vector<std::size_t>& labels, std::size_t n_classes) {
  Tensor<double> t({labels.size(), n_classes});
  auto v = t.mutable_values();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) throw ValidationError("one_hot: label " + std::to_string(labels[i]) + " out of range");
    v[i * n_classes + labels[i]] = 1.0;
  }
  return t;
}

}  // namespace loaa
