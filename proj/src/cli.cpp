// Copyright 2026 The CCL-Derain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ccl_derain/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccl_derain/config.hpp"
#include "ccl_derain/datasets.hpp"
#include "ccl_derain/errors.hpp"
#include "ccl_derain/evaluation.hpp"
#include "ccl_derain/trainer.hpp"

namespace ccl_derain {

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string profile = "full";
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string device;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--profile", f.profile, "Base profile the config file is applied to")
      ->check(CLI::IsMember({"full", "toy"}));
  cmd->add_option("--config", f.config_path, "YAML config file");
  cmd->add_option("--set", f.overrides, "Override a dotted key: key=value (repeatable)");
  cmd->add_option("--seed", f.seed, "Root seed (trainer.seed)");
  cmd->add_option("--device", f.device, "auto|cpu|gpu (trainer.device)")
      ->check(CLI::IsMember({"auto", "cpu", "gpu"}));
}

TrainConfig resolve_config(const ConfigFlags& f) {
  TrainConfig cfg = f.profile == "toy" ? TrainConfig::toy() : TrainConfig::full();
  if (!f.config_path.empty()) {
    if (!fs::is_regular_file(f.config_path)) {
      throw ConfigError("config file not found: " + f.config_path);
    }
    cfg = load_config(f.config_path, cfg);
  }
  for (const auto& o : f.overrides) apply_override(cfg, o);
  if (f.seed) cfg.trainer.seed = *f.seed;
  if (!f.device.empty()) cfg.trainer.device = f.device;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

int cmd_train(const ConfigFlags& f, const std::string& out, const std::string& resume) {
  const TrainConfig cfg = resolve_config(f);
  FitOptions opts;
  opts.out_dir = out;
  if (!resume.empty()) opts.resume_from = resume;
  const FitResult r = fit(cfg, opts);
  std::cout << "trained " << r.steps << " steps; final checkpoint " << r.final_checkpoint.string()
            << "\n";
  return kExitOk;
}

DerainModel load_model(const std::string& checkpoint, bool identity, const TrainConfig& cfg) {
  if (identity) return DerainModel::identity();
  if (checkpoint.empty()) throw ConfigError("--checkpoint is required unless --identity is given");
  if (!fs::is_directory(checkpoint)) throw InputError("checkpoint not found: " + checkpoint);
  return DerainModel::from_checkpoint(checkpoint, resolve_device(cfg.trainer.device));
}

int cmd_eval(const ConfigFlags& f, const std::string& out, const std::string& checkpoint,
             std::string manifest, bool identity, const std::string& dump_dir) {
  const TrainConfig cfg = resolve_config(f);
  if (manifest.empty()) manifest = cfg.data.eval_pairs_manifest;
  if (manifest.empty()) throw ConfigError("no eval manifest (--manifest or data.eval_pairs_manifest)");
  const DerainModel model = load_model(checkpoint, identity, cfg);
  const PairedEvalSet set = load_paired_manifest(manifest);
  std::optional<fs::path> dump;
  if (!dump_dir.empty()) dump = dump_dir;
  const MetricReport report =
      evaluate(model, set, channel_mode_from_string(cfg.eval.channel_mode), dump);
  const std::string table = report.to_table();
  std::cout << table;
  if (!out.empty()) {
    save_config(cfg, fs::path(out) / "config.yaml");
    write_text(fs::path(out) / "report.json", report.to_json().dump(2) + "\n");
    write_text(fs::path(out) / "report.txt", table);
  }
  if (report.count == 0) {
    std::cerr << "error: no evaluation pair could be scored\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_infer(const ConfigFlags& f, const std::string& out, const std::string& checkpoint,
              const std::string& input, bool identity) {
  const TrainConfig cfg = resolve_config(f);
  if (out.empty()) throw ConfigError("--out is required");
  const DerainModel model = load_model(checkpoint, identity, cfg);
  const auto written = infer_directory(model, input, out);
  std::cout << "wrote " << written.size() << " images to " << out << "\n";
  return kExitOk;
}

int cmd_ablate(const ConfigFlags& f, const std::string& out, const std::string& suite_name) {
  const auto suite = ablation_suite(suite_name);
  const TrainConfig cfg = resolve_config(f);
  fs::create_directories(out);
  save_config(cfg, fs::path(out) / "config.yaml");
  const AblationTable table = run_ablation_suite(cfg, suite_name, suite, out);
  const std::string text = table.to_text();
  std::cout << text;
  write_text(fs::path(out) / (suite_name + ".txt"), text);
  write_text(fs::path(out) / (suite_name + ".json"), table.to_json().dump(2) + "\n");
  for (const auto& r : table.rows) {
    if (r.failed) return kExitRuntime;
  }
  return kExitOk;
}

int cmd_make_toy_data(const std::string& out, const ToyDataOptions& opts) {
  if (out.empty()) throw ConfigError("--out is required");
  make_toy_dataset(out, opts);
  std::cout << "wrote toy dataset to " << out << " (" << opts.num_train << " train, "
            << opts.num_test << " test, " << opts.size << "x" << opts.size << ")\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Unsupervised single-image deraining with cycle and location contrastive losses"};
  app.require_subcommand(1);

  ConfigFlags train_f, eval_f, infer_f, ablate_f;
  std::string train_out = "runs/train", train_resume;
  auto* train = app.add_subcommand("train", "Train both generators and discriminators");
  add_config_flags(train, train_f);
  train->add_option("--out", train_out, "Output directory");
  train->add_option("--resume", train_resume, "Checkpoint directory to resume from");

  std::string eval_out, eval_ckpt, eval_manifest, eval_dump;
  bool eval_identity = false;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a paired test set");
  add_config_flags(eval, eval_f);
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint directory");
  eval->add_option("--manifest", eval_manifest, "Paired manifest (rainy gt per line)");
  eval->add_option("--out", eval_out, "Directory for report.json / report.txt");
  eval->add_flag("--identity", eval_identity, "Score the rainy inputs themselves");
  eval->add_option("--dump-images", eval_dump, "Write derained PNGs here");

  std::string infer_out, infer_ckpt, infer_input;
  bool infer_identity = false;
  auto* infer = app.add_subcommand("infer", "Derain every image in a directory");
  add_config_flags(infer, infer_f);
  infer->add_option("--checkpoint", infer_ckpt, "Checkpoint directory");
  infer->add_option("--input", infer_input, "Directory of rainy images")->required();
  infer->add_option("--out", infer_out, "Output directory")->required();
  infer->add_flag("--identity", infer_identity, "Copy inputs through unchanged");

  std::string ablate_out = "runs/ablate", ablate_suite;
  auto* ablate = app.add_subcommand("ablate", "Run an ablation suite (table2|table3|table4)");
  add_config_flags(ablate, ablate_f);
  ablate->add_option("suite", ablate_suite, "table2|table3|table4")->required();
  ablate->add_option("--out", ablate_out, "Output directory");

  std::string toy_out;
  ToyDataOptions toy;
  auto* make_toy = app.add_subcommand("make-toy-data", "Write the synthetic rain dataset");
  make_toy->add_option("--out", toy_out, "Output directory")->required();
  make_toy->add_option("--seed", toy.seed, "Dataset seed");
  make_toy->add_option("--num-train", toy.num_train, "Training images per domain");
  make_toy->add_option("--num-test", toy.num_test, "Paired test images");
  make_toy->add_option("--size", toy.size, "Image side in pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_f, train_out, train_resume);
    if (*eval) {
      return cmd_eval(eval_f, eval_out, eval_ckpt, eval_manifest, eval_identity, eval_dump);
    }
    if (*infer) return cmd_infer(infer_f, infer_out, infer_ckpt, infer_input, infer_identity);
    if (*ablate) return cmd_ablate(ablate_f, ablate_out, ablate_suite);
    if (*make_toy) return cmd_make_toy_data(toy_out, toy);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const EmptyDatasetError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace ccl_derain
