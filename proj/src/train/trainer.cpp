// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "loaa/core/autograd.hpp"
#include "loaa/core/ops.hpp"
#include "loaa/core/rng.hpp"
#include "loaa/train/metrics.hpp"
#include "loaa/train/mixup.hpp"

namespace loaa {

using nlohmann::json;

namespace {

constexpr std::uint64_t kMixupStream = 0x4D49585550000000ull;

template <typename V>
V get_field(const json& j, const char* key, V fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<V>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
  }
}

json metrics_json(const SplitMetrics& m) { return json{{"top1", m.top1}, {"map", m.map}, {"n", m.n}}; }

Tensor<float> targets_for(const std::vector<const Example*>& batch, std::size_t n_classes) {
  Tensor<float> y({batch.size(), n_classes});
  auto v = y.mutable_values();
  for (std::size_t b = 0; b < batch.size(); ++b) v[b * n_classes + batch[b]->label] = 1.0f;
  return y;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(optimizer.lr >= 0.0) || !std::isfinite(optimizer.lr)) throw ConfigError("train: lr must be non-negative");
  if (optimizer.weight_decay < 0.0) throw ConfigError("train: weight_decay must be non-negative");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) || !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("train: betas must lie in [0, 1)");
  }
  if (!(optimizer.eps > 0.0)) throw ConfigError("train: eps must be positive");
  if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
  if (!(mixup_alpha >= 0.0) || !std::isfinite(mixup_alpha)) throw ConfigError("train: mixup_alpha must be >= 0");
}

bool TrainConfig::operator==(const TrainConfig& o) const {
  return optimizer.kind == o.optimizer.kind && optimizer.lr == o.optimizer.lr &&
         optimizer.weight_decay == o.optimizer.weight_decay && optimizer.beta1 == o.optimizer.beta1 &&
         optimizer.beta2 == o.optimizer.beta2 && optimizer.eps == o.optimizer.eps && epochs == o.epochs &&
         batch_size == o.batch_size && mixup_alpha == o.mixup_alpha && seed == o.seed && mode == o.mode;
}

json to_json(const TrainConfig& c) {
  return json{{"optimizer", optimizer_name(c.optimizer.kind)},
              {"lr", c.optimizer.lr},
              {"weight_decay", c.optimizer.weight_decay},
              {"betas", {c.optimizer.beta1, c.optimizer.beta2}},
              {"eps", c.optimizer.eps},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"mixup_alpha", c.mixup_alpha},
              {"seed", c.seed},
              {"mode", mode_name(c.mode)}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  TrainConfig c;
  if (j.contains("optimizer")) c.optimizer.kind = parse_optimizer(get_field<std::string>(j, "optimizer", ""));
  c.optimizer.lr = get_field(j, "lr", c.optimizer.lr);
  c.optimizer.weight_decay = get_field(j, "weight_decay", c.optimizer.weight_decay);
  if (j.contains("betas")) {
    auto b = get_field<std::vector<double>>(j, "betas", {});
    if (b.size() != 2) throw ConfigError("config: betas must hold two numbers");
    c.optimizer.beta1 = b[0];
    c.optimizer.beta2 = b[1];
  }
  c.optimizer.eps = get_field(j, "eps", c.optimizer.eps);
  c.epochs = get_field(j, "epochs", c.epochs);
  c.batch_size = get_field(j, "batch_size", c.batch_size);
  c.mixup_alpha = get_field(j, "mixup_alpha", c.mixup_alpha);
  c.seed = get_field(j, "seed", c.seed);
  if (j.contains("mode")) c.mode = parse_mode(get_field<std::string>(j, "mode", ""));
  c.validate();
  return c;
}

json to_json(const RunLog& log) {
  json epochs = json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_top1", e.val.top1},
                      {"val_map", e.val.map},
                      {"val_n", e.val.n}});
  }
  const auto& b = log.backbone;
  json adapters = nullptr;
  if (!log.adapters.empty()) adapters = {{"placement", log.adapters}, {"r", log.adapter_r}};
  return json{{"format", "loaa-runlog"},
              {"version", 1},
              {"config", to_json(log.config)},
              {"backbone",
               {{"d", b.d},
                {"n_layers", b.n_layers},
                {"n_heads", b.n_heads},
                {"mlp_ratio", b.mlp_ratio},
                {"grid", {b.grid.freq, b.grid.time}},
                {"n_classes", b.n_classes}}},
              {"adapters", adapters},
              {"trainable_params", log.trainable_params},
              {"epochs", epochs},
              {"final",
               {{"val", metrics_json(log.final_val)},
                {"test", log.final_test ? metrics_json(*log.final_test) : json(nullptr)}}}};
}

TrainingDiverged::TrainingDiverged(std::size_t step_, double lr_, double grad_norm_, const std::string& detail)
    : NumericError([&] {
        std::ostringstream os;
        os << "training diverged at step " << step_ << " (lr " << lr_ << ", grad-norm " << grad_norm_ << "): "
           << detail;
        return os.str();
      }()),
      step(step_),
      lr(lr_),
      grad_norm(grad_norm_) {}

Tensor<double> predict(const Model<float>& m, const std::vector<Example>& examples) {
  const std::size_t C = m.config.n_classes;
  Tensor<double> out({examples.size(), C});
  auto v = out.mutable_values();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto logits = encoder_forward(m, examples[i].patches);
    for (std::size_t c = 0; c < C; ++c) v[i * C + c] = logits[c];
  }
  return out;
}

SplitMetrics evaluate(const Model<float>& m, const std::vector<Example>& examples, std::size_t n_classes) {
  if (examples.empty()) throw ConfigError("evaluate: no samples");
  auto logits = predict(m, examples);
  std::vector<std::size_t> labels;
  labels.reserve(examples.size());
  for (const auto& e : examples) labels.push_back(e.label);
  SplitMetrics r;
  r.n = examples.size();
  r.top1 = top1_accuracy(logits, labels);
  r.map = mean_average_precision(softmax(logits, 1), one_hot(labels, n_classes)).map;
  return r;
}

RunLog train(Model<float>& m, const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::size_t C = m.config.n_classes;
  if (data.manifest.n_classes != C) {
    throw ConfigError("train: dataset has " + std::to_string(data.manifest.n_classes) + " classes, model head has " +
                      std::to_string(C));
  }
  if (data.train.empty()) throw ConfigError("train: no training samples");
  if (data.val.empty()) throw ConfigError("train: no validation samples");

  freeze_backbone(m, cfg.mode);
  std::vector<Tensor<float>> params;
  for (auto& nt : named_tensors(m)) params.push_back(nt.tensor);
  AdamState state;

  RunLog log;
  log.config = cfg;
  log.backbone = m.config;
  log.trainable_params = trainable_count(m);
  for (std::size_t l = 0; l < m.config.n_layers && log.adapters.empty(); ++l) {
    const auto* a = m.adapters.get(BlockKind::attn, l);
    const auto* f = m.adapters.get(BlockKind::ffn, l);
    if (!a && !f) continue;
    AdapterConfig ac;
    if (a) ac.attn_kernel = a->kernel;
    if (f) ac.ffn_kernel = f->kernel;
    log.adapters = ac.label();
    log.adapter_r = a ? a->r() : f->r();
  }

  std::size_t step = 0;
  double last_grad_norm = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& idx : epoch_batches(data.train.size(), cfg.batch_size, cfg.seed, epoch)) {
      ++step;
      std::vector<const Example*> batch;
      std::vector<Tensor<float>> x;
      for (auto i : idx) {
        batch.push_back(&data.train[i]);
        x.push_back(data.train[i].patches);
      }
      auto y = targets_for(batch, C);
      if (cfg.mixup_alpha > 0.0) {
        Rng rng(derive_seed(cfg.seed, kMixupStream + step));
        auto mixed = mixup_batch(x, y, cfg.mixup_alpha, rng);
        x = std::move(mixed.x);
        y = std::move(mixed.y);
      }
      for (auto& p : params) p.zero_grad();
      double loss_value = 0.0;
      try {
        auto loss = cross_entropy(forward_batch(m, x), y);
        loss_value = loss.item();
        if (loss.requires_grad()) backward(loss);
      } catch (const NumericError& e) {
        throw TrainingDiverged(step, cfg.optimizer.lr, last_grad_norm, e.what());
      }
      double sq = 0.0;
      for (const auto& p : params)
        if (p.requires_grad() && p.has_grad())
          for (float g : p.grad()) sq += static_cast<double>(g) * g;
      last_grad_norm = std::sqrt(sq);
      if (!std::isfinite(loss_value) || !std::isfinite(last_grad_norm)) {
        throw TrainingDiverged(step, cfg.optimizer.lr, last_grad_norm, "non-finite loss or gradient");
      }
      adam_step(params, state, cfg.optimizer);
      loss_sum += loss_value * static_cast<double>(idx.size());
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(data.train.size());
    rec.val = evaluate(m, data.val, C);
    log.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  for (auto& p : params) p.zero_grad();
  log.final_val = log.epochs.back().val;
  if (!data.test.empty()) log.final_test = evaluate(m, data.test, C);
  log.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return log;
}

}  // namespace loaa
