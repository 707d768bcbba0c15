// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace loaa {
namespace {

template <typename T>
using NodeT = detail::Node<T>;

template <typename T>
using BackwardFn = std::function<void(NodeT<T>&)>;

template <typename T>
void check_finite(OpTag op, const std::vector<T>& v) {
  for (const T x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("non-finite value produced by ") + std::string(op_name(op)));
    }
  }
}

// Wraps a forward result into a tape node. Parents and the backward closure
// are recorded only when some parent requires grad.
template <typename T>
Tensor<T> make_result(OpTag op, Shape shape, std::vector<T> value,
                      std::initializer_list<const Tensor<T>*> parents, BackwardFn<T> fn) {
  check_finite(op, value);
  Tensor<T> out(std::move(shape), std::move(value), false);
  auto& node = *out.node();
  node.op = op;
  bool needs = false;
  for (const auto* p : parents) needs = needs || p->requires_grad();
  if (needs) {
    node.requires_grad = true;
    for (const auto* p : parents) node.parents.push_back(p->node());
    node.backward_fn = std::move(fn);
  }
  return out;
}

template <typename T>
Tensor<T> make_result_n(OpTag op, Shape shape, std::vector<T> value, const std::vector<Tensor<T>>& parents,
                        BackwardFn<T> fn) {
  check_finite(op, value);
  Tensor<T> out(std::move(shape), std::move(value), false);
  auto& node = *out.node();
  node.op = op;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    node.requires_grad = true;
    for (const auto& p : parents) node.parents.push_back(p.node());
    node.backward_fn = std::move(fn);
  }
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError(msg);
}

template <typename T>
void require_rank(const Tensor<T>& x, std::size_t r, const char* op) {
  require(x.rank() == r, std::string(op) + ": expected rank " + std::to_string(r) + ", got " +
                             shape_str(x.shape()));
}

// C[m x n] += A[m x k] B[k x n]. Each C entry accumulates its k products in
// increasing k order, so results match the plain triple loop bit for bit.
// Four rows share every load of B.
template <typename T>
void gemm_acc(const T* A, const T* B, T* C, std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    T* __restrict c0 = C + i * n;
    T* __restrict c1 = c0 + n;
    T* __restrict c2 = c1 + n;
    T* __restrict c3 = c2 + n;
    for (std::size_t t = 0; t < k; ++t) {
      const T a0 = A[i * k + t], a1 = A[(i + 1) * k + t], a2 = A[(i + 2) * k + t], a3 = A[(i + 3) * k + t];
      const T* __restrict b = B + t * n;
      for (std::size_t j = 0; j < n; ++j) {
        const T bj = b[j];
        c0[j] += a0 * bj;
        c1[j] += a1 * bj;
        c2[j] += a2 * bj;
        c3[j] += a3 * bj;
      }
    }
  }
  for (; i < m; ++i) {
    T* __restrict c = C + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const T a = A[i * k + t];
      const T* __restrict b = B + t * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
    }
  }
}

template <typename T>
std::vector<T> transposed(const T* A, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = A[i * cols + j];
  return out;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner extents differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<T> c(m * n, T(0));
  gemm_acc(a.values().data(), b.values().data(), c.data(), m, k, n);
  return make_result<T>(OpTag::matmul, {m, n}, std::move(c), {&a, &b}, [m, k, n](NodeT<T>& self) {
    const T* G = self.grad.data();
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      // dA = G B^T, summed into a fresh buffer before it is added.
      const auto bt = transposed(pb.value.data(), k, n);
      std::vector<T> tmp(m * k, T(0));
      gemm_acc(G, bt.data(), tmp.data(), m, n, k);
      T* dA = pa.grad_buffer().data();
      for (std::size_t i = 0; i < m * k; ++i) dA[i] += tmp[i];
    }
    if (pb.requires_grad) {
      const auto at = transposed(pa.value.data(), m, k);
      gemm_acc(at.data(), G, pb.grad_buffer().data(), k, m, n);
    }
  });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul_nt");
  require_rank(b, 2, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  require(b.dim(1) == k, "matmul_nt: inner extents differ " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()) + "^T");
  std::vector<T> c(m * n, T(0));
  const auto bt = transposed(b.values().data(), n, k);
  gemm_acc(a.values().data(), bt.data(), c.data(), m, k, n);
  return make_result<T>(OpTag::matmul_nt, {m, n}, std::move(c), {&a, &b}, [m, k, n](NodeT<T>& self) {
    const T* G = self.grad.data();
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) gemm_acc(G, pb.value.data(), pa.grad_buffer().data(), m, n, k);
    if (pb.requires_grad) {
      const auto gt = transposed(G, m, n);
      gemm_acc(gt.data(), pa.value.data(), pb.grad_buffer().data(), n, m, k);
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<T> out(m * n);
  const T* A = a.values().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = A[i * n + j];
  return make_result<T>(OpTag::transpose, {n, m}, std::move(out), {&a}, [m, n](NodeT<T>& self) {
    T* dA = self.parents[0]->grad_buffer().data();
    const T* G = self.grad.data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) dA[i * n + j] += G[j * m + i];
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "add: shapes differ " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result<T>(OpTag::add, a.shape(), std::move(out), {&a, &b}, [](NodeT<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "mul: shapes differ " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result<T>(OpTag::mul, a.shape(), std::move(out), {&a, &b}, [](NodeT<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= s;
  return make_result<T>(OpTag::scale, a.shape(), std::move(out), {&a}, [s](NodeT<T>& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
  });
}

template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& a, const Tensor<T>& v) {
  require(a.rank() >= 1, "add_rowvec: rank-0 input");
  const std::size_t n = a.shape().back();
  require(v.numel() == n, "add_rowvec: vector of " + std::to_string(v.numel()) + " elements vs last extent " +
                              std::to_string(n));
  std::vector<T> out(a.values().begin(), a.values().end());
  const auto vv = v.values();
  const std::size_t rows = n ? out.size() / n : 0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] += vv[j];
  return make_result<T>(OpTag::add_rowvec, a.shape(), std::move(out), {&a, &v}, [rows, n](NodeT<T>& self) {
    auto& pa = *self.parents[0];
    auto& pv = *self.parents[1];
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pv.requires_grad) {
      auto g = pv.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[r * n + j];
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (const T v : a.values()) acc += v;
  return make_result<T>(OpTag::sum, Shape{}, std::vector<T>{acc}, {&a}, [](NodeT<T>& self) {
    auto g = self.parents[0]->grad_buffer();
    const T go = self.grad[0];
    for (auto& x : g) x += go;
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const auto xv = x.values();
  std::vector<T> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    out[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)));
  }
  return make_result<T>(OpTag::gelu, x.shape(), std::move(out), {&x}, [](NodeT<T>& self) {
    auto& px = *self.parents[0];
    auto g = px.grad_buffer();
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = px.value[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      g[i] += static_cast<T>(self.grad[i] * (cdf + v * pdf));
    }
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  require(axis < x.rank(), "softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(x.shape()));
  const auto& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  const auto xv = x.values();
  std::vector<T> out(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      T mx = xv[base];
      for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, xv[base + k * inner]);
      T denom = 0;
      for (std::size_t k = 0; k < len; ++k) {
        const T e = std::exp(xv[base + k * inner] - mx);
        out[base + k * inner] = e;
        denom += e;
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= denom;
    }
  }
  return make_result<T>(OpTag::softmax, s, std::move(out), {&x}, [outer, inner, len](NodeT<T>& self) {
    auto g = self.parents[0]->grad_buffer();
    const auto& y = self.value;
    const auto& gy = self.grad;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        T dot = 0;
        for (std::size_t k = 0; k < len; ++k) dot += gy[base + k * inner] * y[base + k * inner];
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = base + k * inner;
          g[i] += y[i] * (gy[i] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps) {
  require(x.rank() >= 1, "layer_norm: rank-0 input");
  const std::size_t d = x.shape().back();
  require(gamma.numel() == d && beta.numel() == d,
          "layer_norm: gamma/beta width " + std::to_string(gamma.numel()) + "/" + std::to_string(beta.numel()) +
              " vs last extent " + std::to_string(d));
  if (!(eps > 0)) throw ConfigError("layer_norm: eps must be positive");
  const std::size_t rows = d ? x.numel() / d : 0;
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<T> out(xv.size());
  std::vector<T> xhat(xv.size());
  std::vector<T> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const T c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + static_cast<T>(eps));
    rstd[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (xr[j] - mean) * rs;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return make_result<T>(
      OpTag::layer_norm, x.shape(), std::move(out), {&x, &gamma, &beta},
      [rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](NodeT<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const auto& gy = self.grad;
        if (pg.requires_grad) {
          auto g = pg.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) g[j] += gy[r * d + j] * xhat[r * d + j];
        }
        if (pb.requires_grad) {
          auto g = pb.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) g[j] += gy[r * d + j];
        }
        if (px.requires_grad) {
          auto g = px.grad_buffer();
          const auto& gam = pg.value;
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_dh = 0, mean_dh_h = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const T dh = gy[r * d + j] * gam[j];
              mean_dh += dh;
              mean_dh_h += dh * xhat[r * d + j];
            }
            mean_dh /= static_cast<T>(d);
            mean_dh_h /= static_cast<T>(d);
            for (std::size_t j = 0; j < d; ++j) {
              const T dh = gy[r * d + j] * gam[j];
              g[r * d + j] += rstd[r] * (dh - mean_dh - xhat[r * d + j] * mean_dh_h);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv_grid(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  require_rank(x, 3, "conv_grid");
  require_rank(kernel, 4, "conv_grid kernel");
  const std::size_t F = x.dim(0), Tt = x.dim(1), cin = x.dim(2);
  const std::size_t kf = kernel.dim(0), kt = kernel.dim(1), cout = kernel.dim(3);
  if (kf % 2 == 0 || kt % 2 == 0) {
    throw ConfigError("conv_grid: kernel extents must be odd, got (" + std::to_string(kf) + "," +
                      std::to_string(kt) + ")");
  }
  if (F == 0 || Tt == 0) throw DimensionError("conv_grid: empty grid " + shape_str(x.shape()));
  require(kernel.dim(2) == cin, "conv_grid: kernel expects " + std::to_string(kernel.dim(2)) +
                                    " input channels, grid has " + std::to_string(cin));
  require(bias.numel() == cout, "conv_grid: bias has " + std::to_string(bias.numel()) + " entries, expected " +
                                    std::to_string(cout));
  const long pf = static_cast<long>(kf / 2), pt = static_cast<long>(kt / 2);
  const T* X = x.values().data();
  const T* K = kernel.values().data();
  const T* Bv = bias.values().data();
  std::vector<T> y(F * Tt * cout);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < Tt; ++t) {
      T* yo = y.data() + (f * Tt + t) * cout;
      for (std::size_t o = 0; o < cout; ++o) yo[o] = Bv[o];
      for (std::size_t df = 0; df < kf; ++df) {
        const long fi = static_cast<long>(f) + static_cast<long>(df) - pf;
        if (fi < 0 || fi >= static_cast<long>(F)) continue;
        for (std::size_t dt = 0; dt < kt; ++dt) {
          const long ti = static_cast<long>(t) + static_cast<long>(dt) - pt;
          if (ti < 0 || ti >= static_cast<long>(Tt)) continue;
          const T* xi = X + (static_cast<std::size_t>(fi) * Tt + static_cast<std::size_t>(ti)) * cin;
          const T* kk = K + (df * kt + dt) * cin * cout;
          for (std::size_t c = 0; c < cin; ++c) {
            const T xv = xi[c];
            const T* krow = kk + c * cout;
            for (std::size_t o = 0; o < cout; ++o) yo[o] += xv * krow[o];
          }
        }
      }
    }
  }
  return make_result<T>(
      OpTag::conv_grid, {F, Tt, cout}, std::move(y), {&x, &kernel, &bias},
      [F, Tt, cin, kf, kt, cout, pf, pt](NodeT<T>& self) {
        auto& px = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pb = *self.parents[2];
        const T* G = self.grad.data();
        if (pb.requires_grad) {
          auto g = pb.grad_buffer();
          for (std::size_t cell = 0; cell < F * Tt; ++cell)
            for (std::size_t o = 0; o < cout; ++o) g[o] += G[cell * cout + o];
        }
        T* dX = px.requires_grad ? px.grad_buffer().data() : nullptr;
        T* dK = pk.requires_grad ? pk.grad_buffer().data() : nullptr;
        if (!dX && !dK) return;
        const T* X = px.value.data();
        const T* K = pk.value.data();
        for (std::size_t f = 0; f < F; ++f) {
          for (std::size_t t = 0; t < Tt; ++t) {
            const T* go = G + (f * Tt + t) * cout;
            for (std::size_t df = 0; df < kf; ++df) {
              const long fi = static_cast<long>(f) + static_cast<long>(df) - pf;
              if (fi < 0 || fi >= static_cast<long>(F)) continue;
              for (std::size_t dt = 0; dt < kt; ++dt) {
                const long ti = static_cast<long>(t) + static_cast<long>(dt) - pt;
                if (ti < 0 || ti >= static_cast<long>(Tt)) continue;
                const std::size_t in_off = (static_cast<std::size_t>(fi) * Tt + static_cast<std::size_t>(ti)) * cin;
                const std::size_t k_off = (df * kt + dt) * cin * cout;
                for (std::size_t c = 0; c < cin; ++c) {
                  const T* krow = K + k_off + c * cout;
                  if (dX) {
                    T acc = 0;
                    for (std::size_t o = 0; o < cout; ++o) acc += go[o] * krow[o];
                    dX[in_off + c] += acc;
                  }
                  if (dK) {
                    const T xv = X[in_off + c];
                    T* dkrow = dK + k_off + c * cout;
                    for (std::size_t o = 0; o < cout; ++o) dkrow[o] += xv * go[o];
                  }
                }
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const Tensor<T>& targets) {
  require_rank(logits, 2, "cross_entropy");
  require(logits.shape() == targets.shape(), "cross_entropy: logits " + shape_str(logits.shape()) +
                                                 " vs targets " + shape_str(targets.shape()));
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  if (B == 0 || C == 0) throw DimensionError("cross_entropy: empty batch");
  const auto lv = logits.values();
  const auto tv = targets.values();
  for (std::size_t b = 0; b < B; ++b) {
    double s = 0;
    for (std::size_t c = 0; c < C; ++c) {
      if (tv[b * C + c] < 0) throw ValidationError("cross_entropy: negative target in row " + std::to_string(b));
      s += tv[b * C + c];
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw ValidationError("cross_entropy: target row " + std::to_string(b) + " sums to " + std::to_string(s));
    }
  }
  std::vector<T> probs(B * C);
  T total = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const T* row = lv.data() + b * C;
    T mx = row[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    T se = 0;
    for (std::size_t c = 0; c < C; ++c) se += std::exp(row[c] - mx);
    const T lse = mx + std::log(se);
    T rowloss = 0;
    for (std::size_t c = 0; c < C; ++c) {
      probs[b * C + c] = std::exp(row[c] - lse);
      rowloss -= tv[b * C + c] * (row[c] - lse);
    }
    total += rowloss;
  }
  total /= static_cast<T>(B);
  std::vector<T> tcopy(tv.begin(), tv.end());
  return make_result<T>(OpTag::cross_entropy, Shape{}, std::vector<T>{total}, {&logits},
                        [B, C, probs = std::move(probs), tcopy = std::move(tcopy)](NodeT<T>& self) {
                          auto g = self.parents[0]->grad_buffer();
                          const T go = self.grad[0] / static_cast<T>(B);
                          for (std::size_t b = 0; b < B; ++b) {
                            T ts = 0;
                            for (std::size_t c = 0; c < C; ++c) ts += tcopy[b * C + c];
                            for (std::size_t c = 0; c < C; ++c) {
                              const std::size_t i = b * C + c;
                              g[i] += go * (probs[i] * ts - tcopy[i]);
                            }
                          }
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(shape_numel(shape) == x.numel(),
          "reshape: " + shape_str(x.shape()) + " cannot become " + shape_str(shape));
  std::vector<T> out(x.values().begin(), x.values().end());
  return make_result<T>(OpTag::reshape, std::move(shape), std::move(out), {&x}, [](NodeT<T>& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count) {
  require(x.rank() >= 1, "slice_rows: rank-0 input");
  require(start + count <= x.dim(0), "slice_rows: rows [" + std::to_string(start) + "," +
                                         std::to_string(start + count) + ") exceed " + shape_str(x.shape()));
  const std::size_t stride = x.dim(0) ? x.numel() / x.dim(0) : 0;
  Shape shape = x.shape();
  shape[0] = count;
  const auto xv = x.values();
  std::vector<T> out(xv.begin() + static_cast<long>(start * stride),
                     xv.begin() + static_cast<long>((start + count) * stride));
  const std::size_t off = start * stride;
  return make_result<T>(OpTag::slice_rows, std::move(shape), std::move(out), {&x}, [off](NodeT<T>& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[off + i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  std::vector<T> out;
  for (const auto& p : parts) {
    require(p.rank() == tail.size() + 1 && Shape(p.shape().begin() + 1, p.shape().end()) == tail,
            "concat_rows: trailing shape mismatch " + shape_str(p.shape()) + " vs " + shape_str(parts[0].shape()));
    rows += p.dim(0);
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  Shape shape{rows};
  shape.insert(shape.end(), tail.begin(), tail.end());
  return make_result_n<T>(OpTag::concat_rows, std::move(shape), std::move(out), parts, [](NodeT<T>& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t n = p->value.size();
      if (p->requires_grad) {
        auto g = p->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  const std::size_t m = x.dim(0), n = x.dim(1);
  require(start + count <= n, "slice_cols: columns [" + std::to_string(start) + "," + std::to_string(start + count) +
                                  ") exceed " + shape_str(x.shape()));
  const auto xv = x.values();
  std::vector<T> out(m * count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = xv[i * n + start + j];
  return make_result<T>(OpTag::slice_cols, {m, count}, std::move(out), {&x}, [m, n, start, count](NodeT<T>& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * n + start + j] += self.grad[i * count + j];
  });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t m = parts[0].dim(0);
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    require(p.dim(0) == m, "concat_cols: row count mismatch " + shape_str(p.shape()));
    n += p.dim(1);
  }
  std::vector<T> out(m * n);
  std::size_t col = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    const auto pv = p.values();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * n + col + j] = pv[i * w + j];
    col += w;
  }
  return make_result_n<T>(OpTag::concat_cols, {m, n}, std::move(out), parts, [m, n](NodeT<T>& self) {
    std::size_t col = 0;
    for (auto& p : self.parents) {
      const std::size_t w = p->shape[1];
      if (p->requires_grad) {
        auto g = p->grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * n + col + j];
      }
      col += w;
    }
  });
}

#define LOAA_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> matmul_nt<T>(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> transpose<T>(const Tensor<T>&);                                             \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                              \
  template Tensor<T> add_rowvec<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                   \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                                  \
  template Tensor<T> softmax<T>(const Tensor<T>&, std::size_t);                                  \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double); \
  template Tensor<T> conv_grid<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> cross_entropy<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                        \
  template Tensor<T> slice_rows<T>(const Tensor<T>&, std::size_t, std::size_t);                  \
  template Tensor<T> concat_rows<T>(const std::vector<Tensor<T>>&);                              \
  template Tensor<T> slice_cols<T>(const Tensor<T>&, std::size_t, std::size_t);                  \
  template Tensor<T> concat_cols<T>(const std::vector<Tensor<T>>&);

LOAA_INSTANTIATE_OPS(float)
LOAA_INSTANTIATE_OPS(double)

#undef LOAA_INSTANTIATE_OPS

}  // namespace loaa
