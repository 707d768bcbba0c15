// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loaa/core/error.hpp"
#include "loaa/frontend/dataset.hpp"
#include "loaa/model/backbone.hpp"
#include "loaa/train/optimizer.hpp"

namespace loaa {

struct TrainConfig {
  OptimizerConfig optimizer{};
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  // 0 disables mixup.
  double mixup_alpha = 0.5;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::peft;

  // Throws ConfigError.
  void validate() const;
  bool operator==(const TrainConfig&) const;
};

nlohmann::json to_json(const TrainConfig& c);
// Reads the TrainConfig fields of j; missing keys keep their defaults and
// other keys are left to the caller. Bad values throw ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct SplitMetrics {
  double top1 = 0.0;
  double map = 0.0;
  std::size_t n = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  SplitMetrics val;
};

struct RunLog {
  TrainConfig config;
  BackboneConfig backbone;
  std::string adapters;  // placement label, empty without adapters
  std::size_t adapter_r = 0;
  std::size_t trainable_params = 0;
  std::vector<EpochRecord> epochs;
  SplitMetrics final_val;
  std::optional<SplitMetrics> final_test;
  // Kept out of the serialized log so identical runs give identical files.
  double wall_clock_s = 0.0;
};

nlohmann::json to_json(const RunLog& log);

// Raised when a step produces a non-finite loss or gradient.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(std::size_t step, double lr, double grad_norm, const std::string& detail);
  std::size_t step;
  double lr;
  double grad_norm;
};

// Logits for the examples, evaluated one at a time in order.
Tensor<double> predict(const Model<float>& m, const std::vector<Example>& examples);

// Throws ConfigError for an empty split.
SplitMetrics evaluate(const Model<float>& m, const std::vector<Example>& examples, std::size_t n_classes);

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

// Applies cfg.mode's freeze rules to m, then trains on data.train and
// evaluates data.val after each epoch.
RunLog train(Model<float>& m, const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace loaa
