// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/cli/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>

#include "loaa/core/autograd.hpp"
#include "loaa/core/error.hpp"
#include "loaa/core/ops.hpp"
#include "loaa/core/rng.hpp"
#include "loaa/model/backbone.hpp"

namespace loaa {

namespace {

using TD = Tensor<double>;

TD project(const TD& y, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(y, random_uniform<double>(y.shape(), rng, -1.0, 1.0)));
}

class Runner {
 public:
  Runner(GradcheckSuite& suite, std::uint64_t seed) : suite_(suite), rng_(seed) {}

  TD rnd(Shape s, double stddev = 1.0) { return random_normal<double>(std::move(s), rng_, stddev); }

  void check(const std::string& op, const std::string& input, const std::function<TD(const TD&)>& f, const TD& x,
             std::size_t max_elements = 0) {
    GradCheckOptions o;
    o.max_elements = max_elements;
    o.sample_seed = rng_.next_u64();
    const std::uint64_t ps = rng_.next_u64();
    suite_.cases.push_back({op, input, grad_check([&](const TD& in) { return project(f(in), ps); }, x, o)});
  }

  Rng& rng() { return rng_; }

 private:
  GradcheckSuite& suite_;
  Rng rng_;
};

void primitive_cases(Runner& r) {
  auto a = r.rnd({3, 4}), b = r.rnd({4, 2}), bt = r.rnd({2, 4}), other = r.rnd({3, 4}), vec = r.rnd({4});
  r.check("matmul", "a", [&](const TD& x) { return matmul(x, b); }, a);
  r.check("matmul", "b", [&](const TD& x) { return matmul(a, x); }, b);
  r.check("matmul_nt", "a", [&](const TD& x) { return matmul_nt(x, bt); }, a);
  r.check("matmul_nt", "b", [&](const TD& x) { return matmul_nt(a, x); }, bt);
  r.check("transpose", "x", [&](const TD& x) { return transpose(x); }, a);
  r.check("add", "a", [&](const TD& x) { return add(x, other); }, a);
  r.check("mul", "a", [&](const TD& x) { return mul(x, other); }, a);
  r.check("mul", "self", [&](const TD& x) { return mul(x, x); }, a);
  r.check("scale", "x", [&](const TD& x) { return scale(x, -1.7); }, a);
  r.check("add_rowvec", "a", [&](const TD& x) { return add_rowvec(x, vec); }, a);
  r.check("add_rowvec", "v", [&](const TD& x) { return add_rowvec(a, x); }, vec);
  r.check("sum", "x", [&](const TD& x) { return scale(sum(mul(x, x)), 0.5); }, a);
  r.check("gelu", "x", [&](const TD& x) { return gelu(x); }, scale(a, 2.0));
  r.check("softmax", "axis0", [&](const TD& x) { return softmax(x, 0); }, a);
  r.check("softmax", "axis1", [&](const TD& x) { return softmax(x, 1); }, a);
  auto gamma = r.rnd({4}), beta = r.rnd({4});
  r.check("layer_norm", "x", [&](const TD& x) { return layer_norm(x, gamma, beta); }, a);
  r.check("layer_norm", "gamma", [&](const TD& x) { return layer_norm(a, x, beta); }, gamma);
  r.check("layer_norm", "beta", [&](const TD& x) { return layer_norm(a, gamma, x); }, beta);
  for (auto [kf, kt] : {std::pair<std::size_t, std::size_t>{1, 1}, {1, 3}, {3, 1}, {3, 3}}) {
    const std::string k = "(" + std::to_string(kf) + "," + std::to_string(kt) + ")";
    auto g = r.rnd({3, 4, 2}), w = r.rnd({kf, kt, 2, 3}), bias = r.rnd({3});
    r.check("conv_grid", "x" + k, [&](const TD& x) { return conv_grid(x, w, bias); }, g);
    r.check("conv_grid", "kernel" + k, [&](const TD& x) { return conv_grid(g, x, bias); }, w);
    r.check("conv_grid", "bias" + k, [&](const TD& x) { return conv_grid(g, w, x); }, bias);
  }
  TD target({3, 4});
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0;
    for (std::size_t c = 0; c < 4; ++c) s += target.mutable_values()[i * 4 + c] = r.rng().uniform(0.1, 1.0);
    for (std::size_t c = 0; c < 4; ++c) target.mutable_values()[i * 4 + c] /= s;
  }
  r.check("cross_entropy", "logits", [&](const TD& x) { return cross_entropy(x, target); }, a);
  r.check("reshape", "x", [&](const TD& x) { return reshape(x, {2, 6}); }, a);
  r.check("slice_rows", "x", [&](const TD& x) { return slice_rows(x, 1, 2); }, a);
  r.check("concat_rows", "x", [&](const TD& x) { return concat_rows<double>({x, other, x}); }, a);
  r.check("slice_cols", "x", [&](const TD& x) { return slice_cols(x, 1, 2); }, a);
  r.check("concat_cols", "x", [&](const TD& x) { return concat_cols<double>({x, other}); }, a);
}

void randomize(Tensor<double>& t, Rng& rng, double stddev) { t = random_normal<double>(t.shape(), rng, stddev); }

void block_cases(Runner& r, const BackboneConfig& backbone, std::size_t max_elements, std::size_t weight_samples) {
  if (max_elements > 0) weight_samples = weight_samples > 0 ? std::min(weight_samples, max_elements) : max_elements;
  BackboneConfig c = backbone;
  c.n_layers = 1;
  auto m = init_model<double>(c, r.rng().next_u64());
  auto& w = m.backbone.layers[0];
  for (Tensor<double>* t : {&w.ln1_g, &w.ln1_b, &w.ln2_g, &w.ln2_b, &w.qkv_b, &w.proj_b, &w.fc1_b, &w.fc2_b}) {
    randomize(*t, r.rng(), 0.3);
  }
  const std::size_t rank = std::max<std::size_t>(1, std::min<std::size_t>(8, c.d / 8));
  auto make_adapter = [&](KernelShape k) {
    auto a = init_adapter<double>(k, c.d, rank, r.rng());
    // A zero up-projection would hide the down-projection gradient.
    for (Tensor<double>* t : {&a.down_b, &a.up_w, &a.up_b}) randomize(*t, r.rng(), 0.05);
    return a;
  };
  auto attn_adapter = make_adapter(kTimeKernel);
  auto ffn_adapter = make_adapter(kFreqKernel);
  const auto x = r.rnd({c.n_tokens(), c.d});

  const std::string attn = "attention_block+adapter";
  // Blocks are probed through their residual update y - x; the O(1)
  // residual would otherwise swamp the finite differences in rounding.
  auto update = [](const TD& y, const TD& in) { return add(y, scale(in, -1.0)); };
  r.check(
      attn, "x", [&](const TD& in) { return update(attention_block(in, w, c.n_heads, &attn_adapter, c.grid), in); }, x,
      max_elements);
  auto attn_param = [&](Tensor<double> AdapterWeights<double>::*field, const char* name) {
    r.check(
        attn, name,
        [&](const TD& in) {
          auto a = attn_adapter;
          a.*field = in;
          return update(attention_block(x, w, c.n_heads, &a, c.grid), x);
        },
        attn_adapter.*field, max_elements);
  };
  attn_param(&AdapterWeights<double>::down_w, "adapter.down_w");
  attn_param(&AdapterWeights<double>::down_b, "adapter.down_b");
  attn_param(&AdapterWeights<double>::up_w, "adapter.up_w");
  attn_param(&AdapterWeights<double>::up_b, "adapter.up_b");

  const std::string ffn = "ffn_block+adapter";
  r.check(
      ffn, "x", [&](const TD& in) { return update(ffn_block(in, w, &ffn_adapter, c.grid), in); }, x, max_elements);
  auto ffn_param = [&](Tensor<double> AdapterWeights<double>::*field, const char* name) {
    r.check(
        ffn, name,
        [&](const TD& in) {
          auto a = ffn_adapter;
          a.*field = in;
          return update(ffn_block(x, w, &a, c.grid), x);
        },
        ffn_adapter.*field, max_elements);
  };
  ffn_param(&AdapterWeights<double>::down_w, "adapter.down_w");
  ffn_param(&AdapterWeights<double>::down_b, "adapter.down_b");
  ffn_param(&AdapterWeights<double>::up_w, "adapter.up_w");
  ffn_param(&AdapterWeights<double>::up_b, "adapter.up_b");

  // Frozen backbone weights, probed without the adapter so its constant
  // contribution does not add rounding noise.
  const AdapterWeights<double>* none = nullptr;
  auto layer_param = [&](const std::string& op, Tensor<double> LayerWeights<double>::*field, const char* name) {
    r.check(
        op, name,
        [&](const TD& in) {
          auto lw = w;
          lw.*field = in;
          return update(op == "attention_block" ? attention_block(x, lw, c.n_heads, none, c.grid)
                                                : ffn_block(x, lw, none, c.grid),
                        x);
        },
        w.*field, weight_samples);
  };
  layer_param("attention_block", &LayerWeights<double>::qkv_w, "qkv_w");
  layer_param("attention_block", &LayerWeights<double>::proj_w, "proj_w");
  layer_param("attention_block", &LayerWeights<double>::ln1_g, "ln1_g");
  layer_param("ffn_block", &LayerWeights<double>::fc1_w, "fc1_w");
  layer_param("ffn_block", &LayerWeights<double>::fc2_w, "fc2_w");
  layer_param("ffn_block", &LayerWeights<double>::ln2_g, "ln2_g");
}

}  // namespace

bool GradcheckSuite::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const auto& c) { return c.report.verifiable && c.report.passed; });
}

std::vector<std::string> GradcheckSuite::failing_ops() const {
  std::vector<std::string> out;
  for (const auto& c : cases) {
    if ((!c.report.passed || !c.report.verifiable) && std::find(out.begin(), out.end(), c.op) == out.end()) {
      out.push_back(c.op);
    }
  }
  return out;
}

std::vector<std::string> GradcheckSuite::ops() const {
  std::vector<std::string> out;
  for (const auto& c : cases)
    if (std::find(out.begin(), out.end(), c.op) == out.end()) out.push_back(c.op);
  return out;
}

double GradcheckSuite::max_rel_error(const std::string& op) const {
  double m = 0.0;
  for (const auto& c : cases)
    if (c.op == op) m = std::max(m, c.report.max_rel_error);
  return m;
}

GradcheckSuite run_gradcheck_suite(const BackboneConfig& backbone, const GradcheckSuiteOptions& opts) {
  backbone.validate();
  std::optional<debug::ScopedBackwardFault> fault;
  if (opts.inject_fault) fault.emplace(*opts.inject_fault);
  GradcheckSuite suite;
  Runner r(suite, opts.seed);
  primitive_cases(r);
  block_cases(r, backbone, opts.block_max_elements, opts.weight_samples);
  return suite;
}

OpTag parse_op_tag(std::string_view name) {
  for (auto op = static_cast<int>(OpTag::matmul); op <= static_cast<int>(OpTag::concat_cols); ++op) {
    if (op_name(static_cast<OpTag>(op)) == name) return static_cast<OpTag>(op);
  }
  std::string valid;
  for (auto op = static_cast<int>(OpTag::matmul); op <= static_cast<int>(OpTag::concat_cols); ++op) {
    if (!valid.empty()) valid += ", ";
    valid += op_name(static_cast<OpTag>(op));
  }
  throw ConfigError("unknown op '" + std::string(name) + "'; valid options: " + valid);
}

}  // namespace loaa
