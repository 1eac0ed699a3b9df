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

#ifndef CCL_DERAIN_METRICS_HPP_
#define CCL_DERAIN_METRICS_HPP_

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccl_derain/image.hpp"

namespace ccl_derain {

/// kY: BT.601 luma (0.299 R + 0.587 G + 0.114 B), full range.
/// kRgb: every channel; PSNR pools the squared error, SSIM averages channels.
enum class ChannelMode { kY, kRgb };

std::string to_string(ChannelMode mode);
ChannelMode channel_mode_from_string(const std::string& s);

/// Channel planes in [0,255] as doubles, row-major.
std::vector<std::vector<double>> to_planes(const Image8& img, ChannelMode mode);

double mse(const Image8& a, const Image8& b, ChannelMode mode = ChannelMode::kY);

/// 10*log10(max_val^2 / MSE); +infinity for identical inputs.
double psnr(const Image8& a, const Image8& b, ChannelMode mode = ChannelMode::kY,
            double max_val = 255.0);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Gaussian-windowed SSIM over one plane, averaged over all fully covered
/// window positions.
double ssim_plane(std::span<const double> a, std::span<const double> b, int width, int height,
                  const SsimParams& p = {});

double ssim(const Image8& a, const Image8& b, ChannelMode mode = ChannelMode::kY,
            const SsimParams& p = {});

struct ImageMetric {
  std::string path;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::string error;  // non-empty when the pair was skipped
};

struct MetricReport {
  std::vector<ImageMetric> per_image;
  double mean_psnr = 0.0;  // over finite PSNR values
  double mean_ssim = 0.0;
  std::size_t count = 0;           // successfully evaluated pairs
  std::size_t infinite_psnr = 0;   // identical pairs excluded from mean_psnr
  std::size_t failed = 0;
  ChannelMode channel_mode = ChannelMode::kY;
  std::string geometry = "native resolution (padded to a multiple of 4 for the generator, cropped back)";

  void add(ImageMetric m);
  /// Recomputes the aggregates from per_image.
  void finalize();
  nlohmann::json to_json() const;
  std::string to_table() const;
};

}  // namespace ccl_derain

#endif  // CCL_DERAIN_METRICS_HPP_
