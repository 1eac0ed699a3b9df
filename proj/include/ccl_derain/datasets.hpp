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

#ifndef CCL_DERAIN_DATASETS_HPP_
#define CCL_DERAIN_DATASETS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ccl_derain/image.hpp"
#include "ccl_derain/rng.hpp"

namespace ccl_derain {

namespace fs = std::filesystem;

/// PNG/JPEG/BMP files directly inside `dir`, sorted. Throws ConfigError if
/// `dir` is missing and EmptyDatasetError if it holds no images.
std::vector<fs::path> list_images(const fs::path& dir);

struct DataLayout {
  std::string rainy_subdir = "rainy";
  std::string clean_subdir = "clean";
};

/// Unpaired rainy/clean collections. Read-only after construction, so it can
/// be shared across loader threads.
class UnpairedDataset {
 public:
  UnpairedDataset(std::vector<fs::path> rainy, std::vector<fs::path> clean,
                  std::vector<Image8> rainy_cache = {},
                  std::vector<Image8> clean_cache = {});

  const std::vector<fs::path>& rainy_paths() const { return rainy_paths_; }
  const std::vector<fs::path>& clean_paths() const { return clean_paths_; }
  std::size_t num_rainy() const { return rainy_paths_.size(); }
  std::size_t num_clean() const { return clean_paths_.size(); }

  /// Unequal set sizes: an epoch is as long as the smaller set.
  std::size_t epoch_length() const { return std::min(num_rainy(), num_clean()); }

  Image8 rainy(std::size_t i) const;
  Image8 clean(std::size_t i) const;

 private:
  std::vector<fs::path> rainy_paths_;
  std::vector<fs::path> clean_paths_;
  std::vector<Image8> rainy_cache_;
  std::vector<Image8> clean_cache_;
};

/// Lists `root/layout.rainy_subdir` and `root/layout.clean_subdir`, sorted by
/// filename. Undecodable files are skipped with a warning. With
/// `keep_decoded`, the decoded images stay in memory.
UnpairedDataset load_unpaired(const fs::path& root, const DataLayout& layout = {},
                              bool keep_decoded = false);

struct PairedEvalSet {
  std::vector<std::pair<fs::path, fs::path>> pairs;  // (rainy, ground truth)
};

/// Two-column manifest: `rainy_path gt_path` per line (whitespace or comma
/// separated, `#` comments). Relative paths resolve against the manifest dir.
PairedEvalSet load_paired_manifest(const fs::path& manifest);

/// Indices of one training step, drawn independently from each domain.
struct StepIndices {
  std::vector<std::size_t> rainy;
  std::vector<std::size_t> clean;
};

/// Independent per-epoch permutations of both sets; epoch_length()/batch_size
/// steps. A pure function of (seeds, epoch).
std::vector<StepIndices> plan_epoch(const UnpairedDataset& ds, const SeedTree& seeds,
                                    std::int64_t epoch, std::int64_t batch_size);

enum class PreprocessMode { kTrain, kEval };

struct PreprocessOptions {
  int load_size = 286;
  int crop_size = 256;
  bool flip = true;
  int pad_multiple = 4;
};

/// Train: bilinear (anti-aliased) resize to load_size, random crop_size crop,
/// random horizontal flip (p=0.5), map to [-1,1]. Eval: native size,
/// reflection-padded at the bottom/right to a multiple of pad_multiple.
/// Deterministic given `seed`.
ImageTensor preprocess(const Image8& image, PreprocessMode mode, std::uint64_t seed,
                       const PreprocessOptions& opts = {});

/// Pads [b,c,h,w] at the bottom/right so both sides are multiples of `multiple`.
torch::Tensor pad_to_multiple(const torch::Tensor& t, int multiple);

struct RainParams {
  int num_streaks = 60;
  double streak_length = 10.0;  // pixels
  double streak_angle = 100.0;  // degrees, 90 = vertical
  double streak_intensity = 0.6;
  double blur_sigma = 0.6;  // pixels
  std::uint64_t seed = 0;
};

/// Composites a layer of blurred oriented streaks additively and clamps to
/// [-1,1]. The same layer is applied to every batch item and channel.
ImageTensor synth_rain(const ImageTensor& clean, const RainParams& params);

/// Procedural clean scene: sky/ground gradient, blocks and discs.
Image8 make_toy_scene(int size, std::uint64_t seed);

struct ToyDataOptions {
  int num_train = 200;
  int num_test = 20;
  int size = 64;
  std::uint64_t seed = 1234;
  RainParams rain;
};

/// Writes `train/{rainy,clean}/NNNN.png` (unpaired scenes),
/// `test/{rainy,clean}/NNNN.png` (paired) and `test/manifest.txt`.
void make_toy_dataset(const fs::path& root, const ToyDataOptions& opts);

}  // namespace ccl_derain

#endif  // CCL_DERAIN_DATASETS_HPP_
