// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "loaa/core/autograd.hpp"
#include "loaa/core/rng.hpp"

namespace loaa {

GradCheckReport grad_check(const ScalarFn& f, const Tensor<double>& x, const GradCheckOptions& opts) {
  GradCheckReport rep;

  Tensor<double> probe = x.detach();
  const double f0 = f(probe).item();
  const double f1 = f(probe).item();
  if (std::memcmp(&f0, &f1, sizeof(double)) != 0) {
    rep.verifiable = false;
    return rep;
  }

  Tensor<double> xg = x.detach();
  xg.set_requires_grad(true);
  Tensor<double> y = f(xg);
  if (y.numel() != 1) throw UsageError("grad_check: function must return a scalar");
  std::vector<double> analytic(x.numel(), 0.0);
  if (y.requires_grad()) {
    backward(y);
    if (xg.has_grad()) std::copy(xg.grad().begin(), xg.grad().end(), analytic.begin());
  }

  auto work = probe.mutable_values();
  rep.rel_errors.assign(x.numel(), 0.0);
  std::vector<std::size_t> coords(x.numel());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  if (opts.max_elements > 0 && opts.max_elements < coords.size()) {
    Rng rng(opts.sample_seed);
    rng.shuffle(coords.begin(), coords.end());
    coords.resize(opts.max_elements);
    std::sort(coords.begin(), coords.end());
  }
  for (std::size_t i : coords) {
    const double orig = work[i];
    work[i] = orig + opts.h;
    const double fp = f(probe).item();
    work[i] = orig - opts.h;
    const double fm = f(probe).item();
    work[i] = orig;
    const double numeric = (fp - fm) / (2.0 * opts.h);
    const double diff = std::abs(numeric - analytic[i]);
    double rel = 0.0;
    if (diff > opts.abs_floor) rel = diff / std::max(std::abs(numeric), std::abs(analytic[i]));
    rep.rel_errors[i] = rel;
    rep.max_abs_error = std::max(rep.max_abs_error, diff);
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = i;
    }
  }
  rep.n_checked = coords.size();
  rep.passed = rep.max_rel_error <= opts.tol;
  return rep;
}

}  // namespace loaa
