// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/frontend/manifest.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "loaa/core/error.hpp"
#include "loaa/core/fileio.hpp"
#include "loaa/core/rng.hpp"

namespace loaa {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};

json synth_to_json(const SynthSpec& s) {
  return json{{"kind", pattern_name(s.kind)}, {"freq", s.freq},         {"freq_end", s.freq_end},
              {"pulse_rate", s.pulse_rate},  {"duty", s.duty},         {"duration", s.duration},
              {"amplitude", s.amplitude},    {"noise", s.noise},       {"sample_rate", s.sample_rate},
              {"seed", s.seed}};
}

SynthSpec synth_from_json(const json& j) {
  SynthSpec s;
  s.kind = parse_pattern(j.at("kind").get<std::string>());
  s.freq = j.value("freq", s.freq);
  s.freq_end = j.value("freq_end", s.freq_end);
  s.pulse_rate = j.value("pulse_rate", s.pulse_rate);
  s.duty = j.value("duty", s.duty);
  s.duration = j.value("duration", s.duration);
  s.amplitude = j.value("amplitude", s.amplitude);
  s.noise = j.value("noise", s.noise);
  s.sample_rate = j.value("sample_rate", s.sample_rate);
  s.seed = j.value("seed", s.seed);
  return s;
}

struct ClassRecipe {
  std::string_view name;
  SynthSpec (*make)(Rng&);
};

SynthSpec low_tone(Rng& r) { return {.kind = PatternKind::steady_tone, .freq = r.uniform(300.0, 500.0)}; }
SynthSpec high_tone(Rng& r) { return {.kind = PatternKind::steady_tone, .freq = r.uniform(2000.0, 3000.0)}; }
SynthSpec up_chirp(Rng& r) {
  return {.kind = PatternKind::up_chirp, .freq = r.uniform(400.0, 600.0), .freq_end = r.uniform(2400.0, 2800.0)};
}
SynthSpec down_chirp(Rng& r) {
  return {.kind = PatternKind::down_chirp, .freq = r.uniform(2400.0, 2800.0), .freq_end = r.uniform(400.0, 600.0)};
}
SynthSpec pulses(Rng& r) {
  return {.kind = PatternKind::pulse_train, .freq = r.uniform(900.0, 1300.0), .pulse_rate = r.uniform(6.0, 10.0)};
}
SynthSpec band(Rng& r) {
  const double lo = r.uniform(1000.0, 1400.0);
  return {.kind = PatternKind::band_noise, .freq = lo, .freq_end = lo + r.uniform(600.0, 1000.0)};
}

constexpr std::array<ClassRecipe, 6> kRecipes = {{{"low-tone", low_tone},
                                                  {"high-tone", high_tone},
                                                  {"up-chirp", up_chirp},
                                                  {"down-chirp", down_chirp},
                                                  {"pulse-train", pulses},
                                                  {"band-noise", band}}};

}  // namespace

std::string_view split_name(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }

Split parse_split(std::string_view text) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i)
    if (kSplitNames[i] == text) return static_cast<Split>(i);
  throw ValidationError("manifest: unknown split '" + std::string(text) + "'");
}

void DatasetManifest::validate() const {
  if (n_classes == 0) throw ValidationError("manifest: n_classes must be positive");
  if (!class_names.empty() && class_names.size() != n_classes) {
    throw ValidationError("manifest: " + std::to_string(class_names.size()) + " class names for " +
                          std::to_string(n_classes) + " classes");
  }
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.label >= n_classes) {
      throw ValidationError("manifest: entry '" + e.id + "' has label " + std::to_string(e.label) + " outside [0, " +
                            std::to_string(n_classes) + ")");
    }
    // An id may appear once, so no clip can sit in two splits.
    if (!ids.insert(e.id).second) throw ValidationError("manifest: duplicate entry id '" + e.id + "'");
    e.synth.validate();
  }
}

std::vector<const ManifestEntry*> DatasetManifest::split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

std::string write_manifest(const DatasetManifest& m) {
  std::ostringstream os;
  json header{{"manifest", {{"n_classes", m.n_classes}, {"seed", m.seed}, {"class_names", m.class_names}}}};
  os << header.dump() << '\n';
  for (const auto& e : m.entries) {
    json line{{"id", e.id}, {"class", e.label}, {"split", split_name(e.split)}, {"synth", synth_to_json(e.synth)}};
    os << line.dump() << '\n';
  }
  return os.str();
}

DatasetManifest parse_manifest(std::string_view text) {
  DatasetManifest m;
  bool have_header = false;
  std::size_t line_no = 0, max_label = 0;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
    try {
      if (j.contains("manifest")) {
        if (have_header || !m.entries.empty()) {
          throw ValidationError("manifest line " + std::to_string(line_no) + ": header must be the first line");
        }
        const auto& h = j.at("manifest");
        m.n_classes = h.at("n_classes").get<std::size_t>();
        m.seed = h.value("seed", std::uint64_t{0});
        m.class_names = h.value("class_names", std::vector<std::string>{});
        have_header = true;
        continue;
      }
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      const auto& cls = j.at("class");
      if (!cls.is_number_integer() || cls.get<long long>() < 0) {
        throw ValidationError("manifest line " + std::to_string(line_no) + ": class must be a non-negative integer");
      }
      e.label = cls.get<std::size_t>();
      e.split = parse_split(j.at("split").get<std::string>());
      e.synth = synth_from_json(j.at("synth"));
      const std::string where = "manifest line " + std::to_string(line_no) + ": ";
      if (have_header && e.label >= m.n_classes) {
        throw ValidationError(where + "entry '" + e.id + "' has label " + std::to_string(e.label) + " outside [0, " +
                              std::to_string(m.n_classes) + ")");
      }
      if (!seen.insert(e.id).second) throw ValidationError(where + "duplicate entry id '" + e.id + "'");
      try {
        e.synth.validate();
      } catch (const ValidationError& ex) {
        throw ValidationError(where + ex.what());
      }
      max_label = std::max(max_label, e.label);
      m.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (!have_header) m.n_classes = m.entries.empty() ? 0 : max_label + 1;
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) { return parse_manifest(read_file_text(path)); }

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  m.validate();
  write_file_atomic(path, write_manifest(m));
}

DatasetManifest standard_manifest(const StandardTaskOptions& opts) {
  if (opts.n_classes < 2 || opts.n_classes > kRecipes.size()) {
    throw ValidationError("manifest: standard task supports 2 to " + std::to_string(kRecipes.size()) + " classes");
  }
  if (opts.clips_per_class == 0) throw ValidationError("manifest: clips_per_class must be positive");
  DatasetManifest m;
  m.n_classes = opts.n_classes;
  m.seed = opts.seed;
  for (std::size_t c = 0; c < opts.n_classes; ++c) {
    m.class_names.emplace_back(kRecipes[c].name);
    Rng split_rng(derive_seed(opts.seed, 1000 + c));
    const auto order = split_rng.permutation(opts.clips_per_class);
    const std::size_t n_train = opts.clips_per_class * 8 / 10, n_val = opts.clips_per_class / 10;
    std::vector<Split> split_of(opts.clips_per_class, Split::test);
    for (std::size_t k = 0; k < opts.clips_per_class; ++k) {
      split_of[order[k]] = k < n_train ? Split::train : k < n_train + n_val ? Split::val : Split::test;
    }
    for (std::size_t i = 0; i < opts.clips_per_class; ++i) {
      const std::uint64_t clip_seed = derive_seed(opts.seed, (c << 32) | i);
      Rng rng(clip_seed);
      ManifestEntry e;
      char id[48];
      std::snprintf(id, sizeof id, "c%zu-%04zu", c, i);
      e.id = id;
      e.label = c;
      e.split = split_of[i];
      e.synth = kRecipes[c].make(rng);
      e.synth.duration = opts.duration;
      e.synth.noise = opts.noise;
      e.synth.seed = clip_seed;
      m.entries.push_back(std::move(e));
    }
  }
  m.validate();
  return m;
}

}  // namespace loaa
