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

#ifndef CCL_DERAIN_IMAGE_HPP_
#define CCL_DERAIN_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <torch/torch.h>

namespace ccl_derain {

/// Normalized image batch [batch, 3, height, width], RGB, values in [-1, 1].
using ImageTensor = torch::Tensor;

/// Decoded 8-bit image, interleaved, row-major. Color images are RGB.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  bool empty() const { return width <= 0 || height <= 0 || data.empty(); }
  std::uint8_t& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image8&) const = default;
};

/// Decodes a PNG/JPEG file into 3-channel RGB. Returns nullopt when the file
/// cannot be decoded.
std::optional<Image8> read_image(const std::filesystem::path& path);

/// Writes an RGB image; the format follows the extension. Throws on failure.
void write_image(const std::filesystem::path& path, const Image8& img);

/// [0,255] -> [-1,1], shape [1,3,H,W] float32.
ImageTensor to_tensor(const Image8& img);

/// [-1,1] -> rounded [0,255]. Takes the first item of a batch.
Image8 to_image8(const ImageTensor& t);

/// Throws ShapeError/InputError if `t` is not a finite [b,3,h,w] tensor in [-1,1].
void check_image_tensor(const ImageTensor& t, const char* what = "image");

}  // namespace ccl_derain

#endif  // CCL_DERAIN_IMAGE_HPP_
