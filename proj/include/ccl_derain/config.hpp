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

#ifndef CCL_DERAIN_CONFIG_HPP_
#define CCL_DERAIN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ccl_derain/datasets.hpp"
#include "ccl_derain/losses.hpp"
#include "ccl_derain/metrics.hpp"
#include "ccl_derain/networks.hpp"

namespace ccl_derain {

struct DataConfig {
  std::string train_root;
  std::string rainy_subdir = "rainy";
  std::string clean_subdir = "clean";
  std::string eval_pairs_manifest;
  int load_size = 286;
  int crop_size = 256;
  bool flip = true;
  int pad_multiple = 4;
  bool preload = true;

  bool operator==(const DataConfig&) const = default;
};

struct ModelConfig {
  int gen_residual_blocks = 9;
  int gen_base_channels = 64;
  int gen_downsample_stages = 2;
  int disc_layers = 3;
  int disc_base_channels = 64;
  std::vector<int64_t> lcl_layers = {0, 1, 2, 3, 7};
  int64_t proj_dim = 256;

  GeneratorSpec generator() const {
    return {gen_residual_blocks, gen_base_channels, gen_downsample_stages};
  }
  DiscriminatorSpec discriminator() const { return {disc_layers, disc_base_channels}; }
  bool operator==(const ModelConfig&) const = default;
};

struct SemanticConfig {
  std::string backend = "standin";  // standin | pretrained
  std::string tap = "pooled";       // pooled | penultimate
  std::string weights;              // TorchScript file; empty -> $CCL_DERAIN_CACHE
  int input_size = 224;
  int standin_dim = 128;

  bool operator==(const SemanticConfig&) const = default;
};

struct LossConfig {
  bool adv = true;
  bool lcl = true;
  bool intra = true;
  bool inter = true;
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  double lambda3 = 0.05;
  std::string adv_mode = "lsgan";
  double tau = 0.07;
  int64_t num_negatives = 255;
  double cos_eps = 1e-8;
  double epsilon = kRatioEpsilon;
  bool intra_fake_neg = true;
  bool intra_real_neg = true;
  bool inter_fake_pos = true;
  bool inter_real_pos = true;
  bool detach_negatives = true;
  bool inter_stop_grad_disc = false;

  LossWeights weights() const { return {lambda1, lambda2, lambda3}; }
  LCLConfig lcl_config() const { return {tau, num_negatives, cos_eps}; }
  bool operator==(const LossConfig&) const = default;
};

struct TrainerConfig {
  int epochs = 400;
  int decay_start_epoch = 200;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 1;
  std::uint64_t seed = 0;
  int checkpoint_every = 50;
  int pool_size = 0;            // 0 disables the discriminator replay pool
  int max_steps_per_epoch = 0;  // 0 = full epoch
  std::string device = "auto";  // auto | cpu | gpu

  bool operator==(const TrainerConfig&) const = default;
};

struct EvalConfig {
  std::string channel_mode = "y";

  bool operator==(const EvalConfig&) const = default;
};

/// Everything that determines a run.
struct TrainConfig {
  DataConfig data;
  ModelConfig model;
  SemanticConfig semantic;
  LossConfig losses;
  TrainerConfig trainer;
  EvalConfig eval;

  bool operator==(const TrainConfig&) const = default;

  /// Full-size recipe: 286->256 crops, 9-block generator, 400 epochs.
  static TrainConfig full();
  /// Desk-scale profile: 64x64 images, 32 base channels, 4 residual blocks,
  /// 30 epochs.
  static TrainConfig toy();

  /// Throws ConfigError on inconsistent values.
  void validate() const;

  PreprocessOptions preprocess_options() const;
  DataLayout layout() const { return {data.rainy_subdir, data.clean_subdir}; }
};

/// Every settable dotted key, in echo order.
std::vector<std::string> config_keys();

/// Sets one dotted key. Unknown keys throw ConfigError listing the closest
/// valid keys; malformed values throw ConfigError naming the key.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const TrainConfig& cfg, const std::string& key);

/// Applies a `key=value` override.
void apply_override(TrainConfig& cfg, const std::string& assignment);

/// Reads a YAML-style file (nested maps or dotted keys) on top of `base`.
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = TrainConfig::full());
TrainConfig parse_config(const std::string& text, TrainConfig base = TrainConfig::full());

/// Nested YAML with every key; parse_config(to_yaml(c)) == c.
std::string to_yaml(const TrainConfig& cfg);
void save_config(const TrainConfig& cfg, const std::filesystem::path& path);

/// Up to `n` valid keys closest (edit distance) to `key`.
std::vector<std::string> nearest_keys(const std::string& key, std::size_t n = 3);

}  // namespace ccl_derain

#endif  // CCL_DERAIN_CONFIG_HPP_
