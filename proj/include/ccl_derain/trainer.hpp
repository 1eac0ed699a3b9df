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

#ifndef CCL_DERAIN_TRAINER_HPP_
#define CCL_DERAIN_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "ccl_derain/config.hpp"
#include "ccl_derain/datasets.hpp"
#include "ccl_derain/losses.hpp"
#include "ccl_derain/metrics.hpp"
#include "ccl_derain/networks.hpp"
#include "ccl_derain/rng.hpp"

namespace ccl_derain {

/// Constant `lr` until `decay_start_epoch`, then linear decay reaching zero
/// at `epochs`. Throws ConfigError outside [0, epochs].
double schedule_lr(int epoch, const TrainerConfig& cfg);

/// Builds the configured semantic encoder (frozen).
std::unique_ptr<SemanticEncoder> make_semantic_encoder(const SemanticConfig& cfg,
                                                       std::uint64_t seed);

torch::Device resolve_device(const std::string& device);

/// The four networks and every projection head.
struct Networks {
  ResnetGenerator g_n{nullptr};  // rainy -> rain-free
  ResnetGenerator g_r{nullptr};  // rain-free -> rainy
  PatchDiscriminator d_n{nullptr};
  PatchDiscriminator d_r{nullptr};
  HeadSet lcl_rainy{nullptr};  // content heads for inputs of g_n
  HeadSet lcl_clean{nullptr};  // content heads for inputs of g_r
  HeadSet inter_n{nullptr};    // discriminant heads on d_n
  HeadSet inter_r{nullptr};    // discriminant heads on d_r

  static Networks build(const TrainConfig& cfg, const SeedTree& seeds);

  std::vector<torch::Tensor> generator_side_parameters() const;
  std::vector<torch::Tensor> discriminator_parameters() const;
  void to(torch::Device device);
};

/// Replay buffer of past generated images for the discriminator update.
class ImagePool {
 public:
  explicit ImagePool(int capacity = 0) : capacity_(capacity) {}
  torch::Tensor query(const torch::Tensor& images, std::mt19937_64& rng);
  const std::vector<torch::Tensor>& images() const { return images_; }
  void restore(std::vector<torch::Tensor> images) { images_ = std::move(images); }

 private:
  int capacity_;
  std::vector<torch::Tensor> images_;
};

/// Networks, optimizers and counters of one run. The only writer of its
/// parameters.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg, std::unique_ptr<SemanticEncoder> encoder = nullptr);

  /// Restores a checkpoint directory written by save_checkpoint. The
  /// resolved config stored alongside it is used unless `cfg` is given.
  static Trainer from_checkpoint(const std::filesystem::path& dir,
                                 std::optional<TrainConfig> cfg = std::nullopt);

  /// One update of both branches: generators (with the contrastive terms)
  /// first, then the discriminators on detached fakes.
  LossReport train_step(const ImageTensor& rainy, const ImageTensor& clean);

  /// Sets the optimizers' learning rate for `epoch`.
  double begin_epoch(int epoch);

  void save_checkpoint(const std::filesystem::path& dir) const;

  const TrainConfig& config() const { return cfg_; }
  Networks& networks() { return nets_; }
  const Networks& networks() const { return nets_; }
  SemanticEncoder& semantic_encoder() { return *encoder_; }
  int epoch() const { return epoch_; }
  void set_epoch(int e) { epoch_ = e; }
  std::int64_t global_step() const { return step_; }
  double learning_rate() const { return lr_; }
  torch::Device device() const { return device_; }

 private:
  TrainConfig cfg_;
  SeedTree seeds_;
  torch::Device device_;
  std::unique_ptr<SemanticEncoder> encoder_;
  Networks nets_;
  std::unique_ptr<torch::optim::Adam> opt_g_;
  std::unique_ptr<torch::optim::Adam> opt_d_;
  ImagePool pool_n_, pool_r_;
  int epoch_ = 0;           // epochs completed
  std::int64_t step_ = 0;   // steps completed
  double lr_ = 0.0;
};

struct FitOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  bool quiet = false;
};

struct FitResult {
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path final_checkpoint;
  std::int64_t steps = 0;
};

/// Trains on cfg.data.train_root. Writes `loss_log.jsonl` (one record per
/// step), `config.yaml`, and checkpoints under `checkpoints/`.
FitResult fit(const TrainConfig& cfg, const FitOptions& opts);

struct AblationConfig {
  std::string label;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string reference;  // full-scale reference numbers, display only
};

/// "table2" (A-G loss toggles), "table3" (intra-CCL negatives),
/// "table4" (inter-CCL positives).
std::vector<AblationConfig> ablation_suite(const std::string& name);

struct AblationRow {
  AblationConfig config;
  TrainConfig resolved;
  bool failed = false;
  std::string error;
  MetricReport report;
};

struct AblationTable {
  std::string suite;
  std::vector<AblationRow> rows;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// Trains and evaluates every configuration with the shared seed and budget
/// of `base`. Failing runs are marked and the suite continues.
AblationTable run_ablation_suite(const TrainConfig& base, const std::string& suite_name,
                                 const std::vector<AblationConfig>& suite,
                                 const std::filesystem::path& out_dir, bool quiet = false);

}  // namespace ccl_derain

#endif  // CCL_DERAIN_TRAINER_HPP_
