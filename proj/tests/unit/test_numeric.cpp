// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "loaa/core/autograd.hpp"
#include "loaa/core/grad_check.hpp"
#include "loaa/core/ops.hpp"
#include "loaa/core/rng.hpp"

using namespace loaa;

namespace {

Tensor<double> rnd(Shape s, Rng& rng, double scale = 1.0) { return random_normal<double>(std::move(s), rng, scale); }

// erf by its Maclaurin series in long double; converges quickly for |x| <= 3.
long double erf_series(long double x) {
  long double term = x, total = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    total += term / (2 * n + 1);
  }
  return total * 2.0L / std::sqrt(std::numbers::pi_v<long double>);
}

// Random projection keeps the checked scalar O(1) and sensitive to every element.
Tensor<double> project(const Tensor<double>& y, std::uint64_t seed) {
  Rng rng(seed);
  auto w = random_uniform<double>(y.shape(), rng, -1.0, 1.0);
  return sum(mul(y, w));
}

}  // namespace

TEST(Matmul, IdentityAndAnnihilator) {
  Rng rng(1);
  auto x = rnd({3, 4}, rng);
  Tensor<double> eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_TRUE(bit_equal(matmul(eye, x), x));
  auto z = matmul(Tensor<double>({2, 3}), x);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(z.shape(), (Shape{2, 4}));
}

TEST(Matmul, MatchesTripleLoopOracle) {
  Rng rng(2);
  auto a = rnd({2, 3}, rng), b = rnd({3, 2}, rng);
  auto c = matmul(a, b);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double ref = 0;
      for (std::size_t t = 0; t < 3; ++t) ref += a[i * 3 + t] * b[t * 2 + j];
      EXPECT_NEAR(c[i * 2 + j], ref, 1e-12);
    }
  auto nt = matmul_nt(a, transpose(b));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(nt[i], c[i], 1e-12);
}

TEST(Matmul, ShapeMismatchIsDimensionError) {
  EXPECT_THROW(matmul(Tensor<double>({2, 3}), Tensor<double>({2, 3})), DimensionError);
}

TEST(Gelu, KnownValues) {
  auto y = gelu(Tensor<double>({3}, {0.0, 10.0, 1.0}));
  EXPECT_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], 10.0, 1e-6);
  const double oracle = static_cast<double>(0.5L * (1.0L + erf_series(1.0L / std::sqrt(2.0L))));
  EXPECT_NEAR(oracle, 0.8413447460685429, 1e-15);
  EXPECT_NEAR(y[2], oracle, 1e-12);
}

TEST(Softmax, Examples) {
  auto u = softmax(Tensor<double>::full({4}, 3.5), 0);
  for (double v : u.values()) EXPECT_NEAR(v, 0.25, 1e-15);
  auto s = softmax(Tensor<double>({3}, {1000.0, 0.0, 0.0}), 0);
  EXPECT_NEAR(s[0], 1.0, 1e-12);
  EXPECT_NEAR(s[1], 0.0, 1e-12);
  Rng rng(3);
  auto x = rnd({7}, rng, 2.0);
  auto y = softmax(x, 0);
  double z = 0;
  for (double v : x.values()) z += std::exp(v);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(y[i], std::exp(x[i]) / z, 1e-12);
}

TEST(Softmax, SumsToOneForLargeMagnitudes) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_uniform<float>({5, 9}, rng, -1e4, 1e4);
    for (std::size_t axis : {0u, 1u}) {
      auto y = softmax(x, axis);
      const std::size_t len = x.dim(axis), other = x.dim(1 - axis);
      for (std::size_t o = 0; o < other; ++o) {
        double total = 0;
        for (std::size_t k = 0; k < len; ++k) total += axis == 1 ? y[o * 9 + k] : y[k * 9 + o];
        EXPECT_NEAR(total, 1.0, 1e-6);
      }
    }
  }
}

TEST(LayerNorm, Examples) {
  auto ones = Tensor<double>::full({4}, 1.0);
  auto zeros = Tensor<double>({4});
  auto c = layer_norm(Tensor<double>::full({1, 4}, 2.5), ones, zeros);
  for (double v : c.values()) EXPECT_EQ(v, 0.0);

  Rng rng(5);
  auto beta = rnd({4}, rng);
  auto g0 = layer_norm(rnd({3, 4}, rng), Tensor<double>({4}), beta);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(g0[i], beta[i % 4]);

  auto x = rnd({1, 64}, rng, 3.0);
  auto y = layer_norm(x, Tensor<double>::full({64}, 1.0), Tensor<double>({64}));
  double mean = 0, var = 0;
  for (double v : y.values()) mean += v;
  mean /= 64;
  for (double v : y.values()) var += (v - mean) * (v - mean);
  var /= 64;
  EXPECT_LE(std::abs(mean), 1e-6);
  EXPECT_NEAR(var, 1.0, 1e-4);
  EXPECT_THROW(layer_norm(x, Tensor<double>({3}), Tensor<double>({3})), DimensionError);
}

TEST(ConvGrid, PointwiseKernelEqualsMatmul) {
  Rng rng(6);
  auto x = random_normal<float>({3, 5, 6}, rng);
  auto k = random_normal<float>({1, 1, 6, 4}, rng);
  auto b = random_normal<float>({4}, rng);
  auto y = conv_grid(x, k, b);
  auto ref = add_rowvec(matmul(reshape(x, {15, 6}), reshape(k, {6, 4})), b);
  for (std::size_t i = 0; i < ref.numel(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6);
}

TEST(ConvGrid, DeltaKernelIsIdentity) {
  Rng rng(7);
  const std::size_t c = 3;
  auto x = random_normal<double>({2, 4, c}, rng);
  Tensor<double> k({1, 3, c, c});
  for (std::size_t ch = 0; ch < c; ++ch) k.mutable_values()[(1 * c + ch) * c + ch] = 1.0;
  EXPECT_TRUE(bit_equal(conv_grid(x, k, Tensor<double>({c})), x));
}

TEST(ConvGrid, MatchesDirectSummationOracle) {
  Rng rng(8);
  const long F = 3, T = 3, ci = 2, co = 3, kf = 3, kt = 1;
  auto x = rnd({3, 3, 2}, rng), k = rnd({3, 1, 2, 3}, rng), b = rnd({3}, rng);
  auto y = conv_grid(x, k, b);
  for (long f = 0; f < F; ++f)
    for (long t = 0; t < T; ++t)
      for (long o = 0; o < co; ++o) {
        double ref = b[o];
        for (long df = 0; df < kf; ++df)
          for (long dt = 0; dt < kt; ++dt)
            for (long c = 0; c < ci; ++c) {
              const long fi = f + df - 1, ti = t + dt;
              if (fi < 0 || fi >= F || ti < 0 || ti >= T) continue;
              ref += x[(fi * T + ti) * ci + c] * k[((df * kt + dt) * ci + c) * co + o];
            }
        EXPECT_NEAR(y[(f * T + t) * co + o], ref, 1e-12);
      }
}

TEST(ConvGrid, EvenKernelIsConfigError) {
  EXPECT_THROW(conv_grid(Tensor<double>({2, 2, 1}), Tensor<double>({2, 1, 1, 1}), Tensor<double>({1})), ConfigError);
}

TEST(ConvGrid, ReceptiveFieldIsExactlyTheFootprint) {
  Rng rng(9);
  const std::size_t F = 4, T = 6;
  for (auto [kf, kt] : {std::pair<std::size_t, std::size_t>{1, 3}, {3, 1}, {3, 3}, {1, 1}}) {
    auto k = random_uniform<double>({kf, kt, 2, 2}, rng, 0.5, 1.5);
    auto b = rnd({2}, rng);
    auto x = rnd({F, T, 2}, rng);
    auto base = conv_grid(x, k, b);
    for (std::size_t pf = 0; pf < F; ++pf)
      for (std::size_t pt = 0; pt < T; ++pt) {
        auto xp = x.detach();
        xp.mutable_values()[(pf * T + pt) * 2] += 1.0;
        auto y = conv_grid(xp, k, b);
        for (std::size_t f = 0; f < F; ++f)
          for (std::size_t t = 0; t < T; ++t) {
            const bool inside = std::abs(long(f) - long(pf)) <= long(kf / 2) && std::abs(long(t) - long(pt)) <= long(kt / 2);
            const bool changed = y[(f * T + t) * 2] != base[(f * T + t) * 2] ||
                                 y[(f * T + t) * 2 + 1] != base[(f * T + t) * 2 + 1];
            EXPECT_EQ(changed, inside) << "kernel " << kf << "x" << kt << " probe (" << pf << "," << pt << ") out ("
                                       << f << "," << t << ")";
          }
      }
  }
}

TEST(Backward, SumAndQuadratic) {
  Rng rng(10);
  auto x = rnd({3, 2}, rng);
  x.set_requires_grad(true);
  backward(sum(x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
  x.zero_grad();
  backward(scale(sum(mul(x, x)), 0.5));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(x.grad()[i], x[i]);
}

TEST(Backward, UsageErrors) {
  auto x = Tensor<double>({2}, {1.0, 2.0}, true);
  EXPECT_THROW(backward(scale(x, 2.0)), UsageError);  // non-scalar
  EXPECT_THROW(backward(sum(Tensor<double>({2}))), UsageError);  // detached
  auto loss = sum(x);
  backward(loss);
  EXPECT_THROW(backward(loss), UsageError);  // consumed
}

TEST(Backward, CompositeGraphMatchesFiniteDifferences) {
  Rng rng(11);
  auto w = rnd({4, 3}, rng);
  auto x = rnd({2, 4}, rng);
  auto rep = grad_check([&](const Tensor<double>& in) { return project(softmax(gelu(matmul(in, w)), 1), 99); }, x);
  EXPECT_TRUE(rep.passed) << rep.max_rel_error;
}

TEST(Backward, ReplayIsBitIdentical) {
  auto run = [] {
    Rng rng(12);
    auto x = random_normal<float>({2, 3, 4}, rng);
    auto k = random_normal<float>({1, 3, 4, 5}, rng, 1.0, true);
    auto b = random_normal<float>({5}, rng, 1.0, true);
    auto y = sum(mul(gelu(conv_grid(x, k, b)), random_normal<float>({2, 3, 5}, rng)));
    backward(y);
    return std::vector<float>(k.grad().begin(), k.grad().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(GradCheck, SumIsExact) {
  Rng rng(13);
  auto rep = grad_check([](const Tensor<double>& in) { return sum(in); }, rnd({5}, rng));
  EXPECT_TRUE(rep.passed);
  EXPECT_LT(rep.max_rel_error, 1e-9);
}

TEST(GradCheck, CrossEntropyPasses) {
  Rng rng(14);
  Tensor<double> target({1, 3}, {0.0, 1.0, 0.0});
  auto rep = grad_check([&](const Tensor<double>& in) { return cross_entropy(in, target); }, rnd({1, 3}, rng));
  EXPECT_TRUE(rep.passed) << rep.max_rel_error;
}

TEST(GradCheck, FlagsNondeterministicFunctions) {
  int calls = 0;
  auto rep = grad_check(
      [&](const Tensor<double>& in) { return scale(sum(in), static_cast<double>(++calls)); },
      Tensor<double>({2}, {1.0, 2.0}));
  EXPECT_FALSE(rep.verifiable);
  EXPECT_FALSE(rep.passed);
}

TEST(GradCheck, DetectsInjectedFault) {
  Rng rng(15);
  auto x = rnd({3, 3}, rng);
  debug::ScopedBackwardFault fault(OpTag::gelu);
  auto rep = grad_check([](const Tensor<double>& in) { return project(gelu(in), 5); }, x);
  EXPECT_FALSE(rep.passed);
}

TEST(GradCheck, SampledCoordinatesAreSeededSubsets) {
  Rng rng(16);
  auto x = rnd({5, 8}, rng);
  debug::ScopedBackwardFault fault(OpTag::gelu);
  auto checked = [&](std::uint64_t seed) {
    GradCheckOptions o;
    o.max_elements = 7;
    o.sample_seed = seed;
    auto rep = grad_check([](const Tensor<double>& in) { return project(gelu(in), 5); }, x, o);
    EXPECT_EQ(rep.n_checked, 7u);
    EXPECT_EQ(rep.rel_errors.size(), x.numel());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rep.rel_errors.size(); ++i)
      if (rep.rel_errors[i] > 0) idx.push_back(i);
    return idx;
  };
  const auto a = checked(1);
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(a, checked(1));
  EXPECT_NE(a, checked(2));
}

TEST(CrossEntropy, Examples) {
  auto uniform = cross_entropy(Tensor<double>({1, 4}), Tensor<double>({1, 4}, {0, 0, 1, 0}));
  EXPECT_NEAR(uniform.item(), std::log(4.0), 1e-12);

  Rng rng(16);
  auto logits = rnd({1, 5}, rng);
  auto p = softmax(logits, 1);
  double entropy = 0;
  for (double v : p.values()) entropy -= v * std::log(v);
  EXPECT_NEAR(cross_entropy(logits, p).item(), entropy, 1e-12);

  auto l = rnd({4, 6}, rng, 3.0);
  auto t = softmax(rnd({4, 6}, rng), 1);
  double ref = 0;
  for (std::size_t b = 0; b < 4; ++b) {
    double z = 0;
    for (std::size_t c = 0; c < 6; ++c) z += std::exp(l[b * 6 + c]);
    for (std::size_t c = 0; c < 6; ++c) ref -= t[b * 6 + c] * std::log(std::exp(l[b * 6 + c]) / z);
  }
  EXPECT_NEAR(cross_entropy(l, t).item(), ref / 4, 1e-10);

  EXPECT_THROW(cross_entropy(Tensor<double>({1, 2}), Tensor<double>({1, 2}, {0.5, 0.4})), ValidationError);
}

TEST(Tensor, NonFiniteForwardIsAnError) {
  auto x = Tensor<double>({2}, {1.0, std::numeric_limits<double>::infinity()});
  EXPECT_THROW(scale(x, 2.0), NumericError);
}

// Every differentiable op on random shapes, degenerate extents included.
class OpGradProperty : public ::testing::TestWithParam<int> {};

TEST_P(OpGradProperty, AllOpsPassGradCheck) {
  const int trial = GetParam();
  Rng rng(100 + trial);
  const std::size_t m = 1 + rng.below(3), k = 1 + rng.below(4), n = 1 + rng.below(3);
  const std::size_t F = trial == 0 ? 1 : 1 + rng.below(3), T = trial == 0 ? 1 : 1 + rng.below(4);
  const std::size_t ci = trial == 1 ? 1 : 1 + rng.below(3), co = 1 + rng.below(3);
  const std::uint64_t ps = 1000 + trial;

  auto check = [&](const char* name, const ScalarFn& f, const Tensor<double>& x) {
    auto rep = grad_check(f, x);
    EXPECT_TRUE(rep.passed) << name << " trial " << trial << " max rel err " << rep.max_rel_error;
  };
  auto b2 = rnd({k, n}, rng), a2 = rnd({m, k}, rng), bt = rnd({n, k}, rng);
  check("matmul/a", [&](auto& x) { return project(matmul(x, b2), ps); }, a2);
  check("matmul/b", [&](auto& x) { return project(matmul(a2, x), ps); }, b2);
  check("matmul_nt/a", [&](auto& x) { return project(matmul_nt(x, bt), ps); }, a2);
  check("matmul_nt/b", [&](auto& x) { return project(matmul_nt(a2, x), ps); }, bt);
  check("transpose", [&](auto& x) { return project(transpose(x), ps); }, a2);
  auto other = rnd({m, k}, rng);
  check("add", [&](auto& x) { return project(add(x, other), ps); }, a2);
  check("mul", [&](auto& x) { return project(mul(x, other), ps); }, a2);
  check("mul/self", [&](auto& x) { return project(mul(x, x), ps); }, a2);
  check("scale", [&](auto& x) { return project(scale(x, -1.7), ps); }, a2);
  auto vec = rnd({k}, rng);
  check("add_rowvec/a", [&](auto& x) { return project(add_rowvec(x, vec), ps); }, a2);
  check("add_rowvec/v", [&](auto& x) { return project(add_rowvec(a2, x), ps); }, vec);
  check("gelu", [&](auto& x) { return project(gelu(x), ps); }, scale(a2, 2.0));
  check("softmax/0", [&](auto& x) { return project(softmax(x, 0), ps); }, a2);
  check("softmax/1", [&](auto& x) { return project(softmax(x, 1), ps); }, a2);
  auto gam = rnd({k}, rng), bet = rnd({k}, rng);
  if (k > 1) {
    check("layer_norm/x", [&](auto& x) { return project(layer_norm(x, gam, bet), ps); }, a2);
  }
  check("layer_norm/gamma", [&](auto& x) { return project(layer_norm(a2, x, bet), ps); }, gam);
  check("layer_norm/beta", [&](auto& x) { return project(layer_norm(a2, gam, x), ps); }, bet);
  for (auto [kf, kt] : {std::pair<std::size_t, std::size_t>{1, 1}, {1, 3}, {3, 1}, {3, 3}}) {
    auto g = rnd({F, T, ci}, rng), kk = rnd({kf, kt, ci, co}, rng), bb = rnd({co}, rng);
    check("conv_grid/x", [&](auto& x) { return project(conv_grid(x, kk, bb), ps); }, g);
    check("conv_grid/k", [&](auto& x) { return project(conv_grid(g, x, bb), ps); }, kk);
    check("conv_grid/b", [&](auto& x) { return project(conv_grid(g, kk, x), ps); }, bb);
  }
  auto tgt = softmax(rnd({m, n}, rng), 1);
  check("cross_entropy", [&](auto& x) { return cross_entropy(x, tgt); }, rnd({m, n}, rng));
  check("reshape", [&](auto& x) { return project(reshape(x, {k, m}), ps); }, a2);
  check("slice_rows", [&](auto& x) { return project(slice_rows(x, m - 1, 1), ps); }, a2);
  check("concat_rows", [&](auto& x) { return project(concat_rows<double>({x, other, x}), ps); }, a2);
  check("slice_cols", [&](auto& x) { return project(slice_cols(x, 0, k), ps); }, a2);
  check("concat_cols", [&](auto& x) { return project(concat_cols<double>({x, other}), ps); }, a2);
}

INSTANTIATE_TEST_SUITE_P(RandomShapes, OpGradProperty, ::testing::Range(0, 6));
