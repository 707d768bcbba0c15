// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/cli/io.hpp"

#include "loaa/core/error.hpp"
#include "loaa/core/fileio.hpp"

namespace loaa {

void ensure_writable(const std::vector<std::filesystem::path>& paths, bool force) {
  if (force) return;
  for (const auto& p : paths) {
    if (std::filesystem::exists(p)) throw NoClobberError(p.string() + " already exists; pass --force to overwrite");
  }
}

void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  const auto text = read_file_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NoClobberError*>(&e)) return kExitNoClobber;
  if (dynamic_cast<const GradcheckFailed*>(&e)) return kExitGradcheck;
  if (dynamic_cast<const NumericError*>(&e)) return kExitDiverged;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const BudgetError*>(&e) ||
      dynamic_cast<const LoadError*>(&e) || dynamic_cast<const UsageError*>(&e) ||
      dynamic_cast<const MetricError*>(&e)) {
    return kExitConfig;
  }
  return kExitFailure;
}

}  // namespace loaa
