// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <exception>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace loaa {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoClobber = 3;
inline constexpr int kExitDiverged = 4;
inline constexpr int kExitGradcheck = 5;

class NoClobberError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GradcheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws NoClobberError when any path exists and force is off.
void ensure_writable(const std::vector<std::filesystem::path>& paths, bool force);

void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);

// Throws LoadError when the file is missing and ConfigError when it does not
// parse.
nlohmann::json read_json_file(const std::filesystem::path& path);

int exit_code_for(const std::exception& e);

}  // namespace loaa
