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

#ifndef CCL_DERAIN_EVALUATION_HPP_
#define CCL_DERAIN_EVALUATION_HPP_

#include <filesystem>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "ccl_derain/datasets.hpp"
#include "ccl_derain/image.hpp"
#include "ccl_derain/metrics.hpp"
#include "ccl_derain/networks.hpp"

namespace ccl_derain {

/// Read-only rainy -> rain-free mapping: a trained G_n or the identity.
class DerainModel {
 public:
  static DerainModel identity();

  /// Loads G_n from a checkpoint directory written by the trainer. Throws
  /// InputError when the directory or its files are missing.
  static DerainModel from_checkpoint(const std::filesystem::path& dir,
                                     torch::Device device = torch::kCPU);

  DerainModel(ResnetGenerator generator, torch::Device device = torch::kCPU);

  /// Pads to the generator's stride, runs it and crops back to the input size.
  Image8 derain(const Image8& rainy) const;

  bool is_identity() const { return !generator_; }
  std::uint64_t checksum() const;

 private:
  DerainModel() = default;

  mutable ResnetGenerator generator_{nullptr};
  torch::Device device_{torch::kCPU};
};

/// Runs the model on every rainy image and scores the output against its
/// ground truth. Unreadable or mismatched pairs are recorded and skipped.
/// With `dump_dir`, derained PNGs are written there under the rainy file name.
MetricReport evaluate(const DerainModel& model, const PairedEvalSet& eval_set,
                      ChannelMode mode = ChannelMode::kY,
                      const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

/// Derains every decodable image in `input_dir` into `output_dir` (same file
/// stem, .png). Returns the written paths. Throws EmptyDatasetError when no
/// image could be read.
std::vector<std::filesystem::path> infer_directory(const DerainModel& model,
                                                   const std::filesystem::path& input_dir,
                                                   const std::filesystem::path& output_dir);

}  // namespace ccl_derain

#endif  // CCL_DERAIN_EVALUATION_HPP_
