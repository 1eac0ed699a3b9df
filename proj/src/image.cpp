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

#include "ccl_derain/image.hpp"

#include <cstring>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ccl_derain/errors.hpp"

namespace ccl_derain {

std::optional<Image8> read_image(const std::filesystem::path& path) {
  cv::Mat bgr;
  try {
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    return std::nullopt;
  }
  if (bgr.empty() || bgr.depth() != CV_8U) return std::nullopt;
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image8 img(rgb.cols, rgb.rows, 3);
  for (int y = 0; y < rgb.rows; ++y) {
    std::memcpy(&img.data[static_cast<std::size_t>(y) * rgb.cols * 3], rgb.ptr(y),
                static_cast<std::size_t>(rgb.cols) * 3);
  }
  return img;
}

void write_image(const std::filesystem::path& path, const Image8& img) {
  if (img.empty() || img.channels != 3) {
    throw InputError("write_image: expected a non-empty 3-channel image for " +
                     path.string());
  }
  cv::Mat rgb(img.height, img.width, CV_8UC3,
              const_cast<std::uint8_t*>(img.data.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr);
  } catch (const cv::Exception& e) {
    throw std::runtime_error("write_image: " + path.string() + ": " + e.what());
  }
  if (!ok) throw std::runtime_error("write_image: failed to write " + path.string());
}

ImageTensor to_tensor(const Image8& img) {
  if (img.empty()) throw InputError("to_tensor: empty image");
  if (img.channels != 3) {
    throw InputError("to_tensor: expected 3 channels, got " +
                     std::to_string(img.channels));
  }
  auto hwc = torch::from_blob(const_cast<std::uint8_t*>(img.data.data()),
                              {img.height, img.width, 3}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).unsqueeze(0).contiguous();
}

Image8 to_image8(const ImageTensor& t) {
  if (t.dim() != 4 || t.size(1) != 3) {
    throw ShapeError("to_image8: expected [b,3,h,w]");
  }
  auto chw = t[0].detach().to(torch::kCPU, torch::kFloat32);
  auto u8 = chw.add(1.0).mul(127.5).round().clamp(0, 255).to(torch::kUInt8)
                .permute({1, 2, 0}).contiguous();
  Image8 img(static_cast<int>(t.size(3)), static_cast<int>(t.size(2)), 3);
  std::memcpy(img.data.data(), u8.data_ptr<std::uint8_t>(), img.data.size());
  return img;
}

void check_image_tensor(const ImageTensor& t, const char* what) {
  if (!t.defined() || t.dim() != 4 || t.size(1) != 3) {
    throw ShapeError(std::string(what) + ": expected tensor of shape [b,3,h,w]");
  }
  auto d = t.detach();
  if (!torch::isfinite(d).all().item<bool>()) {
    throw NonFiniteError(std::string(what) + ": non-finite values");
  }
  if (d.numel() > 0 && (d.min().item<float>() < -1.0f || d.max().item<float>() > 1.0f)) {
    throw InputError(std::string(what) + ": values outside [-1, 1]");
  }
}

}  // namespace ccl_derain
