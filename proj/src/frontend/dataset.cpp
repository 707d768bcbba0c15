// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/frontend/dataset.hpp"

#include <cmath>

#include <json.hpp>

#include "loaa/core/error.hpp"
#include "loaa/core/fileio.hpp"
#include "loaa/core/rng.hpp"
#include "loaa/frontend/patchify.hpp"
#include "loaa/model/checkpoint.hpp"

namespace loaa {

using nlohmann::json;

namespace {

json frontend_to_json(const FrontendConfig& f) {
  return json{{"frame_length_ms", f.stft.frame_length_ms},
              {"frame_shift_ms", f.stft.frame_shift_ms},
              {"target_frames", f.stft.target_frames},
              {"n_mels", f.n_mels},
              {"f_min", f.f_min},
              {"f_max", f.f_max},
              {"normalize", f.normalize}};
}

FrontendConfig frontend_from_json(const json& j) {
  FrontendConfig f;
  f.stft.frame_length_ms = j.at("frame_length_ms").get<double>();
  f.stft.frame_shift_ms = j.at("frame_shift_ms").get<double>();
  f.stft.target_frames = j.at("target_frames").get<std::size_t>();
  f.n_mels = j.at("n_mels").get<std::size_t>();
  f.f_min = j.at("f_min").get<double>();
  f.f_max = j.at("f_max").get<double>();
  f.normalize = j.at("normalize").get<bool>();
  return f;
}

std::vector<Example>& bucket(Dataset& d, Split s) {
  return s == Split::train ? d.train : s == Split::val ? d.val : d.test;
}

}  // namespace

const std::vector<Example>& Dataset::split(Split s) const {
  return s == Split::train ? train : s == Split::val ? val : test;
}

GridShape Dataset::grid() const {
  return {frontend.n_mels / kPatchSize, (frontend.stft.target_frames + kPatchSize - 1) / kPatchSize};
}

FrontendConfig frontend_for_grid(GridShape grid) {
  FrontendConfig f;
  f.n_mels = grid.freq * kPatchSize;
  f.stft.target_frames = grid.time * kPatchSize;
  return f;
}

Dataset build_dataset(const DatasetManifest& manifest, const FrontendConfig& frontend) {
  manifest.validate();
  if (frontend.stft.target_frames == 0) throw ConfigError("dataset: frontend needs a fixed target frame count");
  Dataset d;
  d.manifest = manifest;
  d.frontend = frontend;
  for (const auto& e : manifest.entries) {
    Example ex;
    ex.id = e.id;
    ex.label = e.label;
    auto mel = compute_log_mel(synth_signal(e.synth), frontend);
    ex.patches = patchify(mel, kPatchSize);
    ex.mel = std::move(mel.values);
    bucket(d, e.split).push_back(std::move(ex));
  }
  return d;
}

void dataset_generate(const DatasetManifest& manifest, const FrontendConfig& frontend,
                      const std::filesystem::path& out_dir) {
  manifest.validate();
  std::filesystem::create_directories(out_dir);
  Checkpoint waves, mels;
  for (const auto& e : manifest.entries) {
    auto w = synth_signal(e.synth);
    auto mel = compute_log_mel(w, frontend);
    waves.add("wave." + e.id, true, {w.samples.size()}, w.samples);
    const auto v = mel.values.values();
    mels.add("mel." + e.id, true, mel.values.shape(), std::vector<float>(v.begin(), v.end()));
    mels.add("floor." + e.id, true, {1}, {mel.floor_value});
  }
  save_checkpoint(out_dir / "waves.loaa", waves);
  save_checkpoint(out_dir / "mels.loaa", mels);
  write_file_atomic(out_dir / "frontend.json", frontend_to_json(frontend).dump(2) + "\n");
  save_manifest(out_dir / "manifest.jsonl", manifest);
}

Dataset dataset_load(const std::filesystem::path& dir) {
  for (const char* f : {"manifest.jsonl", "frontend.json", "mels.loaa"}) {
    if (!std::filesystem::exists(dir / f)) throw LoadError("dataset: missing " + (dir / f).string());
  }
  Dataset d;
  try {
    d.manifest = load_manifest(dir / "manifest.jsonl");
    d.frontend = frontend_from_json(json::parse(read_file_text(dir / "frontend.json")));
  } catch (const ValidationError& e) {
    throw LoadError(std::string("dataset: ") + e.what());
  } catch (const json::exception& e) {
    throw LoadError(std::string("dataset: frontend.json: ") + e.what());
  }
  const auto mels = load_checkpoint(dir / "mels.loaa");
  for (const auto& e : d.manifest.entries) {
    const auto* mel = mels.find("mel." + e.id);
    const auto* floor = mels.find("floor." + e.id);
    if (!mel || !floor) throw LoadError("dataset: mels.loaa has no spectrogram for '" + e.id + "'");
    if (mel->shape.size() != 2 || mel->shape[0] != d.frontend.n_mels) {
      throw LoadError("dataset: spectrogram for '" + e.id + "' has shape " + shape_str(mel->shape));
    }
    Example ex;
    ex.id = e.id;
    ex.label = e.label;
    ex.mel = Tensor<float>(mel->shape, mel->data);
    ex.patches = patchify(ex.mel, kPatchSize, floor->data[0]);
    bucket(d, e.split).push_back(std::move(ex));
  }
  return d;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch) {
  if (batch_size == 0) throw ConfigError("batches: batch size must be positive");
  Rng rng(derive_seed(seed, 0x5EED0000ull + epoch));
  const auto order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    out.emplace_back(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(std::min(n, i + batch_size)));
  }
  return out;
}

}  // namespace loaa
