// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

#include "loaa/cli/gradcheck_suite.hpp"
#include "loaa/cli/io.hpp"
#include "loaa/core/error.hpp"
#include "loaa/core/rng.hpp"
#include "loaa/frontend/dataset.hpp"
#include "loaa/model/adapters.hpp"
#include "loaa/model/backbone.hpp"
#include "loaa/model/checkpoint.hpp"
#include "loaa/train/trainer.hpp"
#include "loaa/viz/attnmap.hpp"

namespace loaa {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kAdapterSeedTag = 0xADA0;

// Settings live in one JSON object: the --config file first, then any flag
// given on the command line under the same key.
class Settings {
 public:
  Settings(CLI::App* cmd, std::string default_preset) : cmd_(cmd), default_preset_(std::move(default_preset)) {
    add<std::uint64_t>("--seed", "seed", "Seed for every random draw (default 0)");
    add<std::string>("--preset", "preset", "Backbone preset: tiny or base (default " + default_preset_ + ")");
    cmd_->add_option("--config", config_path_, "JSON file whose fields mirror the flags");
  }

  template <typename V>
  CLI::Option* add(const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<V>();
    auto* opt = cmd_->add_option(flag, *value, help);
    setters_.push_back([opt, value, key](json& j) {
      if (opt->count()) j[key] = *value;
    });
    return opt;
  }

  void flag(const std::string& flag, const std::string& key, const std::string& help) {
    auto* opt = cmd_->add_flag(flag, help);
    setters_.push_back([opt, key](json& j) {
      if (opt->count()) j[key] = true;
    });
  }

  json resolve() const {
    json j = json::object();
    if (!config_path_.empty()) {
      j = read_json_file(config_path_);
      if (!j.is_object()) throw ConfigError(config_path_ + ": expected a JSON object");
    }
    for (const auto& s : setters_) s(j);
    if (!j.contains("preset")) j["preset"] = default_preset_;
    if (!j.contains("seed")) j["seed"] = 0;
    return j;
  }

 private:
  CLI::App* cmd_;
  std::string default_preset_;
  std::string config_path_;
  std::vector<std::function<void(json&)>> setters_;
};

template <typename V>
std::optional<V> get(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<V>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
  }
}

template <typename V>
V require(const json& j, const char* key, const char* flag) {
  auto v = get<V>(j, key);
  if (!v) throw ConfigError(std::string("missing ") + flag + " (config field '" + key + "')");
  return *v;
}

bool enabled(const json& j, const char* key) { return get<bool>(j, key).value_or(false); }

BackboneConfig preset_of(const json& j) { return preset_config(require<std::string>(j, "preset", "--preset")); }

std::string grid_str(GridShape g) { return std::to_string(g.freq) + "x" + std::to_string(g.time); }

void check_geometry(const BackboneConfig& model, const Dataset& data) {
  if (model.grid != data.grid()) {
    throw ConfigError("model grid " + grid_str(model.grid) + " does not match dataset grid " + grid_str(data.grid()));
  }
  if (model.n_classes != data.manifest.n_classes) {
    throw ConfigError("model head has " + std::to_string(model.n_classes) + " classes, dataset has " +
                      std::to_string(data.manifest.n_classes));
  }
}

struct AdapterChoice {
  std::optional<KernelShape> attn, ffn;
  std::size_t r = 0;
  std::optional<double> budget;

  bool any() const { return attn || ffn; }
  AdapterConfig config() const { return {attn, ffn, r}; }
};

std::optional<KernelShape> kernel_field(const json& j, const char* key) {
  auto s = get<std::string>(j, key);
  if (!s || *s == "none") return std::nullopt;
  return KernelShape::parse(*s);
}

// Reads attn_kernel / ffn_kernel / r / budget and solves r when a budget is
// given.
AdapterChoice adapter_choice(const json& j, const BackboneConfig& backbone, bool default_kernels) {
  AdapterChoice a;
  a.attn = kernel_field(j, "attn_kernel");
  a.ffn = kernel_field(j, "ffn_kernel");
  if (!a.any() && default_kernels && !j.contains("attn_kernel") && !j.contains("ffn_kernel")) {
    a.attn = kTimeKernel;
    a.ffn = kFreqKernel;
  }
  a.budget = get<double>(j, "budget");
  const auto r = get<std::size_t>(j, "r");
  if (a.budget && r) throw ConfigError("give either r or budget, not both");
  if (!a.any()) return a;
  if (a.budget) {
    a.r = budget_solve_r(*a.budget, a.attn, a.ffn, backbone, backbone_census(backbone)).r;
  } else {
    a.r = r.value_or(8);
  }
  a.config().validate(backbone.d);
  return a;
}

json census_json(const AdapterChoice& a, const BackboneConfig& backbone, TrainMode mode) {
  const std::size_t census = backbone_census(backbone), head = head_census(backbone);
  const std::size_t adapter = a.any() ? param_count(a.config(), backbone, false) : 0;
  std::size_t trainable = 0;
  switch (mode) {
    case TrainMode::peft: trainable = adapter + head; break;
    case TrainMode::linear_probe: trainable = head; break;
    case TrainMode::full_ft: trainable = census + adapter + head; break;
  }
  json j{{"mode", mode_name(mode)},
         {"adapters", a.any() ? json(a.config().label()) : json(nullptr)},
         {"r", a.any() ? json(a.r) : json(nullptr)},
         {"adapter_params", adapter},
         {"trainable_params", trainable},
         {"backbone_census", census},
         {"fraction", static_cast<double>(trainable) / static_cast<double>(census)}};
  if (a.budget) j["budget"] = *a.budget;
  return j;
}

const Example& find_clip(const Dataset& data, const std::string& id) {
  for (auto s : {Split::train, Split::val, Split::test}) {
    for (const auto& e : data.split(s))
      if (e.id == id) return e;
  }
  throw ConfigError("clip '" + id + "' is not in the dataset");
}

// synth -----------------------------------------------------------------

void setup_synth(CLI::App* cmd, Settings& s) {
  s.add<std::string>("--manifest", "manifest", "JSONL manifest to synthesize (default: the standard task)");
  s.add<std::string>("--out", "out", "Output dataset directory");
  s.add<std::size_t>("--classes", "n_classes", "Standard task: number of classes, 1-6 (default 4)");
  s.add<std::size_t>("--clips-per-class", "clips_per_class", "Standard task: clips per class (default 100)");
  s.add<double>("--duration", "duration", "Standard task: clip length in seconds (default 1.3)");
  s.add<double>("--noise", "noise", "Standard task: additive noise amplitude (default 0.05)");
  s.flag("--force", "force", "Overwrite an existing dataset");
  cmd->description("Synthesize a dataset of clips and log-mel features");
}

int run_synth(const json& j, std::ostream& out) {
  const fs::path dir = require<std::string>(j, "out", "--out");
  DatasetManifest man;
  if (auto path = get<std::string>(j, "manifest")) {
    man = load_manifest(*path);
  } else {
    StandardTaskOptions o;
    o.n_classes = get<std::size_t>(j, "n_classes").value_or(o.n_classes);
    o.clips_per_class = get<std::size_t>(j, "clips_per_class").value_or(o.clips_per_class);
    o.duration = get<double>(j, "duration").value_or(o.duration);
    o.noise = get<double>(j, "noise").value_or(o.noise);
    o.seed = require<std::uint64_t>(j, "seed", "--seed");
    man = standard_manifest(o);
  }
  man.validate();
  const auto frontend = frontend_for_grid(preset_of(j).grid);
  ensure_writable({dir / "manifest.jsonl", dir / "waves.loaa", dir / "mels.loaa", dir / "frontend.json"},
                  enabled(j, "force"));
  dataset_generate(man, frontend, dir);
  out << json{{"out", dir.string()},
              {"n_classes", man.n_classes},
              {"n_mels", frontend.n_mels},
              {"n_frames", frontend.stft.target_frames},
              {"train", man.split(Split::train).size()},
              {"val", man.split(Split::val).size()},
              {"test", man.split(Split::test).size()}}
             .dump()
      << "\n";
  return kExitOk;
}

// train -----------------------------------------------------------------

void setup_train(CLI::App* cmd, Settings& s) {
  s.add<std::string>("--data", "data", "Dataset directory written by synth");
  s.add<std::string>("--out", "out", "Directory for runlog.json and model.loaa");
  s.add<std::string>("--backbone", "backbone", "Checkpoint whose backbone and head start the run");
  s.add<std::string>("--optimizer", "optimizer", "adam or adamw (default adamw)");
  s.add<double>("--lr", "lr", "Learning rate (default 1e-3)");
  s.add<double>("--weight-decay", "weight_decay", "Weight decay (default 0)");
  s.add<std::size_t>("--epochs", "epochs", "Training epochs (default 30)");
  s.add<std::size_t>("--batch-size", "batch_size", "Batch size (default 16)");
  s.add<double>("--mixup-alpha", "mixup_alpha", "Mixup Beta parameter, 0 disables (default 0.5)");
  s.add<std::string>("--mode", "mode", "peft, linear-probe or full-ft (default peft)");
  s.add<std::string>("--attn-kernel", "attn_kernel", "Attention adapter kernel: L, T, F, (3,3) or none");
  s.add<std::string>("--ffn-kernel", "ffn_kernel", "FFN adapter kernel: L, T, F, (3,3) or none");
  s.add<std::size_t>("--r", "r", "Adapter bottleneck dimension (default 8)");
  s.add<double>("--budget", "budget", "Solve r for this adapter parameter fraction of the backbone");
  s.flag("--dry-run", "dry_run", "Print the solved r and trainable census, then exit");
  s.flag("--force", "force", "Overwrite existing outputs");
  cmd->description("Train adapters (or the head, or everything) on a dataset");
}

int run_train(const json& j, std::ostream& out) {
  const auto tc = train_config_from_json(j);
  Model<float> m;
  BackboneConfig backbone;
  const auto backbone_path = get<std::string>(j, "backbone");
  if (backbone_path) {
    m = model_from_checkpoint(load_checkpoint(*backbone_path));
    backbone = m.config;
  } else {
    backbone = preset_of(j);
  }
  const auto adapters =
      tc.mode == TrainMode::linear_probe ? AdapterChoice{} : adapter_choice(j, backbone, tc.mode == TrainMode::peft);
  if (tc.mode == TrainMode::peft && !adapters.any()) throw ConfigError("peft mode needs at least one adapter kernel");

  if (enabled(j, "dry_run")) {
    out << census_json(adapters, backbone, tc.mode).dump() << "\n";
    return kExitOk;
  }

  const auto data = dataset_load(require<std::string>(j, "data", "--data"));
  check_geometry(backbone, data);
  const fs::path dir = require<std::string>(j, "out", "--out");
  ensure_writable({dir / "runlog.json", dir / "model.loaa"}, enabled(j, "force"));

  if (!backbone_path) m = init_model<float>(backbone, tc.seed);
  m.adapters = AdapterSet<float>(backbone.n_layers);
  if (adapters.any()) m.adapters.attach_all(adapters.config(), backbone.d, derive_seed(tc.seed, kAdapterSeedTag));

  const auto log = train(m, data, tc, {[&](const EpochRecord& e) {
                           char line[160];
                           std::snprintf(line, sizeof line, "epoch %zu/%zu loss %.6f val_top1 %.4f val_map %.4f\n",
                                         e.epoch, tc.epochs, e.train_loss, e.val.top1, e.val.map);
                           out << line << std::flush;
                         }});
  fs::create_directories(dir);
  save_checkpoint(dir / "model.loaa", to_checkpoint(m));
  write_json_atomic(dir / "runlog.json", to_json(log));
  out << json{{"runlog", (dir / "runlog.json").string()},
              {"checkpoint", (dir / "model.loaa").string()},
              {"final", to_json(log)["final"]}}
             .dump()
      << "\n";
  return kExitOk;
}

// eval ------------------------------------------------------------------

void setup_eval(CLI::App* cmd, Settings& s) {
  s.add<std::string>("--checkpoint", "checkpoint", "Model checkpoint");
  s.add<std::string>("--data", "data", "Dataset directory");
  s.add<std::string>("--split", "split", "train, val or test (default val)");
  cmd->description("Evaluate a checkpoint; prints {top1, map, n}");
}

int run_eval(const json& j, std::ostream& out) {
  const auto split = parse_split(get<std::string>(j, "split").value_or("val"));
  const auto m = model_from_checkpoint(load_checkpoint(require<std::string>(j, "checkpoint", "--checkpoint")));
  const auto data = dataset_load(require<std::string>(j, "data", "--data"));
  check_geometry(m.config, data);
  const auto r = evaluate(m, data.split(split), m.config.n_classes);
  out << json{{"top1", r.top1}, {"map", r.map}, {"n", r.n}}.dump() << "\n";
  return kExitOk;
}

// gradcheck -------------------------------------------------------------

void setup_gradcheck(CLI::App* cmd, Settings& s) {
  s.add<std::string>("--inject-fault", "inject_fault", "Corrupt the backward pass of one op (suite self-test)");
  s.add<std::size_t>("--max-elements", "max_elements",
                     "Coordinates perturbed per block input, 0 for all (default: all on tiny, 96 on base)");
  cmd->description("Finite-difference check of every op and the adapter-augmented blocks");
}

int run_gradcheck(const json& j, std::ostream& out) {
  const auto backbone = preset_of(j);
  GradcheckSuiteOptions o;
  o.seed = require<std::uint64_t>(j, "seed", "--seed");
  o.block_max_elements = get<std::size_t>(j, "max_elements").value_or(backbone.d > 64 ? 96 : 0);
  if (auto f = get<std::string>(j, "inject_fault")) o.inject_fault = parse_op_tag(*f);
  const auto suite = run_gradcheck_suite(backbone, o);
  for (const auto& c : suite.cases) {
    char line[200];
    std::snprintf(line, sizeof line, "%-24s %-18s checked %6zu  max rel err %.3e  %s\n", c.op.c_str(),
                  c.input.c_str(), c.report.n_checked, c.report.max_rel_error,
                  !c.report.verifiable ? "UNVERIFIABLE" : c.report.passed ? "ok" : "FAIL");
    out << line;
  }
  out << "per-op max rel err:\n";
  for (const auto& op : suite.ops()) {
    char line[120];
    std::snprintf(line, sizeof line, "  %-24s %.3e\n", op.c_str(), suite.max_rel_error(op));
    out << line;
  }
  out << suite.ops().size() << " operations checked at tolerance 1e-4\n";
  const auto failing = suite.failing_ops();
  if (!failing.empty()) {
    std::string list;
    for (const auto& f : failing) list += (list.empty() ? "" : ", ") + f;
    throw GradcheckFailed("gradcheck failed: " + list);
  }
  return kExitOk;
}

// params ----------------------------------------------------------------

void setup_params(CLI::App* cmd, Settings& s, std::vector<std::string>& tokens) {
  cmd->add_option("spec", tokens, "key=value tokens: placement=attn|ffn|both kernel=K budget=F r=N");
  s.add<std::size_t>("--r", "r", "Bottleneck dimension instead of a budget");
  s.add<double>("--budget", "budget", "Adapter parameter fraction of the backbone");
  cmd->description("Solve r for a budget and print the trainable census");
}

void apply_param_tokens(const std::vector<std::string>& tokens, json& j) {
  std::optional<std::string> placement, kernel;
  for (const auto& t : tokens) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("params: expected key=value, got '" + t + "'");
    const auto key = t.substr(0, eq), value = t.substr(eq + 1);
    auto number = [&](auto parse) {
      try {
        std::size_t used = 0;
        auto v = parse(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      } catch (const std::logic_error&) {
        throw ConfigError("params: " + key + " expects a number, got '" + value + "'");
      }
    };
    if (key == "placement") {
      placement = value;
    } else if (key == "kernel") {
      kernel = value;
    } else if (key == "attn_kernel" || key == "ffn_kernel") {
      j[key] = value;
    } else if (key == "budget") {
      j["budget"] = number([](const std::string& s, std::size_t* u) { return std::stod(s, u); });
    } else if (key == "r") {
      j["r"] = number([](const std::string& s, std::size_t* u) { return std::stoull(s, u); });
    } else {
      throw ConfigError("params: unknown key '" + key +
                        "' (valid: placement, kernel, attn_kernel, ffn_kernel, budget, r)");
    }
  }
  if (!placement && !kernel) return;
  const std::string k = kernel.value_or("T");
  const std::string p = placement.value_or("both");
  if (p != "attn" && p != "ffn" && p != "both") {
    throw ConfigError("params: placement must be attn, ffn or both, got '" + p + "'");
  }
  j["attn_kernel"] = p == "ffn" ? "none" : k;
  j["ffn_kernel"] = p == "attn" ? "none" : k;
}

int run_params(json j, const std::vector<std::string>& tokens, std::ostream& out) {
  apply_param_tokens(tokens, j);
  const auto backbone = preset_of(j);
  const auto a = adapter_choice(j, backbone, true);
  auto report = census_json(a, backbone, TrainMode::peft);
  report["preset"] = j["preset"];
  out << report.dump() << "\n";
  return kExitOk;
}

// attnmap ---------------------------------------------------------------

void setup_attnmap(CLI::App* cmd, Settings& s) {
  s.add<std::string>("--checkpoint", "checkpoint", "Model checkpoint (default: untrained preset model from --seed)");
  s.add<std::string>("--data", "data", "Dataset directory holding the clip");
  s.add<std::string>("--clip", "clip", "Clip id");
  s.add<std::size_t>("--t0", "t0", "First key frame");
  s.add<std::size_t>("--t1", "t1", "One past the last key frame");
  s.add<std::size_t>("--layer", "layer", "Encoder layer (default: last)");
  s.add<std::size_t>("--head", "head", "Single head instead of the mean over heads");
  s.add<std::string>("--out", "out", "Output PGM path; metadata goes to <out>.json");
  s.flag("--force", "force", "Overwrite existing outputs");
  cmd->description("Render last-layer attention toward a key time range as a PGM image");
}

int run_attnmap(const json& j, std::ostream& out) {
  const auto ckpt = get<std::string>(j, "checkpoint");
  const auto m = ckpt ? model_from_checkpoint(load_checkpoint(*ckpt))
                      : init_model<float>(preset_of(j), require<std::uint64_t>(j, "seed", "--seed"));
  const auto data = dataset_load(require<std::string>(j, "data", "--data"));
  if (m.config.grid != data.grid()) {
    throw ConfigError("model grid " + grid_str(m.config.grid) + " does not match dataset grid " +
                      grid_str(data.grid()));
  }
  const auto clip = require<std::string>(j, "clip", "--clip");
  const auto& ex = find_clip(data, clip);
  AttnMapRequest req;
  req.t0 = require<std::size_t>(j, "t0", "--t0");
  req.t1 = require<std::size_t>(j, "t1", "--t1");
  req.layer = get<std::size_t>(j, "layer");
  req.head = get<std::size_t>(j, "head");
  const fs::path path = require<std::string>(j, "out", "--out");
  const fs::path meta_path = path.string() + ".json";
  ensure_writable({path, meta_path}, enabled(j, "force"));
  const auto map = attention_map(m, ex.patches, req);
  auto meta = attnmap_sidecar(map);
  meta["clip"] = clip;
  meta["checkpoint"] = ckpt ? json(*ckpt) : json(nullptr);
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  write_pgm(path, map.image);
  write_json_atomic(meta_path, meta);
  out << json{{"out", path.string()},
              {"width", map.image.width},
              {"height", map.image.height},
              {"grid", {map.grid.freq, map.grid.time}},
              {"key_columns", {map.columns.begin, map.columns.end}}}
             .dump()
      << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Look-Aside Adapter toolkit", "loaa"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  auto* synth = app.add_subcommand("synth");
  auto* train_cmd = app.add_subcommand("train");
  auto* eval = app.add_subcommand("eval");
  auto* gradcheck = app.add_subcommand("gradcheck");
  auto* params = app.add_subcommand("params");
  auto* attnmap = app.add_subcommand("attnmap");
  Settings s_synth(synth, "tiny"), s_train(train_cmd, "tiny"), s_eval(eval, "tiny"), s_grad(gradcheck, "tiny"),
      s_params(params, "base"), s_attn(attnmap, "tiny");
  std::vector<std::string> param_tokens;
  setup_synth(synth, s_synth);
  setup_train(train_cmd, s_train);
  setup_eval(eval, s_eval);
  setup_gradcheck(gradcheck, s_grad);
  setup_params(params, s_params, param_tokens);
  setup_attnmap(attnmap, s_attn);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) return run_synth(s_synth.resolve(), out);
    if (train_cmd->parsed()) return run_train(s_train.resolve(), out);
    if (eval->parsed()) return run_eval(s_eval.resolve(), out);
    if (gradcheck->parsed()) return run_gradcheck(s_grad.resolve(), out);
    if (params->parsed()) return run_params(s_params.resolve(), param_tokens, out);
    if (attnmap->parsed()) return run_attnmap(s_attn.resolve(), out);
  } catch (const TrainingDiverged& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitFailure;
}

}  // namespace loaa
