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

#ifndef CCL_DERAIN_TESTS_HELPERS_HPP_
#define CCL_DERAIN_TESTS_HELPERS_HPP_

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>
#include <unistd.h>

#include "ccl_derain/config.hpp"
#include "ccl_derain/image.hpp"
#include "oracles.hpp"

namespace test_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("ccl_derain_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline torch::Tensor to_tensor(const testkit::Mat& m) {
  const auto rows = static_cast<int64_t>(m.size());
  const auto cols = static_cast<int64_t>(m.front().size());
  auto t = torch::empty({rows, cols}, torch::kFloat64);
  auto a = t.accessor<double, 2>();
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) a[i][j] = m[i][j];
  }
  return t;
}

inline testkit::Vec to_vec(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous().view({-1});
  return testkit::Vec(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
}

inline testkit::RgbImage to_rgb(const ccl_derain::Image8& img) {
  return {img.width, img.height, img.data};
}

inline ccl_derain::Image8 random_image(int w, int h, std::uint64_t seed) {
  testkit::CaseRng rng(seed);
  ccl_derain::Image8 img(w, h, 3);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next() % 256);
  return img;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

/// Small nets and 16x16 crops so a train step takes milliseconds.
inline ccl_derain::TrainConfig tiny_config() {
  auto c = ccl_derain::TrainConfig::toy();
  c.data.load_size = 16;
  c.data.crop_size = 16;
  c.model.gen_residual_blocks = 1;
  c.model.gen_base_channels = 4;
  c.model.gen_downsample_stages = 2;
  c.model.disc_layers = 2;
  c.model.disc_base_channels = 4;
  c.model.lcl_layers = {0, 1, 2, 3};
  c.model.proj_dim = 8;
  c.losses.num_negatives = 15;
  c.semantic.input_size = 32;
  c.semantic.standin_dim = 8;
  c.trainer.epochs = 2;
  c.trainer.decay_start_epoch = 1;
  c.trainer.checkpoint_every = 1;
  c.trainer.device = "cpu";
  return c;
}

/// Random image batch in [-1, 1].
inline torch::Tensor random_batch(int64_t b, int64_t size, std::uint64_t seed,
                                  torch::Dtype dtype = torch::kFloat32) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return (torch::rand({b, 3, size, size}, gen) * 2 - 1).to(dtype);
}

}  // namespace test_support

#endif  // CCL_DERAIN_TESTS_HELPERS_HPP_
