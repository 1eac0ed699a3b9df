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

#include "ccl_derain/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ccl_derain/errors.hpp"

namespace ccl_derain {

std::string to_string(ChannelMode mode) { return mode == ChannelMode::kY ? "y" : "rgb"; }

ChannelMode channel_mode_from_string(const std::string& s) {
  if (s == "y") return ChannelMode::kY;
  if (s == "rgb") return ChannelMode::kRgb;
  throw ConfigError("unknown channel mode '" + s + "' (expected y|rgb)");
}

namespace {

void check_pair(const Image8& a, const Image8& b) {
  if (a.empty() || b.empty()) throw InputError("metric: empty image");
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw ShapeError("metric: images differ in shape (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
  }
  if (a.channels != 3) throw InputError("metric: expected 3-channel images");
}

// Valid-mode separable filtering of `src` (w x h) with a normalized 1-D kernel.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> to_planes(const Image8& img, ChannelMode mode) {
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (img.channels != 3) throw InputError("to_planes: expected 3 channels");
  if (mode == ChannelMode::kY) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] + 0.114 * img.data[3 * i + 2];
    }
    return {std::move(y)};
  }
  std::vector<std::vector<double>> planes(3, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) planes[c][i] = img.data[3 * i + c];
  }
  return planes;
}

double mse(const Image8& a, const Image8& b, ChannelMode mode) {
  check_pair(a, b);
  const auto pa = to_planes(a, mode), pb = to_planes(b, mode);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < pa.size(); ++c) {
    for (std::size_t i = 0; i < pa[c].size(); ++i) {
      const double d = pa[c][i] - pb[c][i];
      acc += d * d;
    }
    n += pa[c].size();
  }
  return acc / static_cast<double>(n);
}

double psnr(const Image8& a, const Image8& b, ChannelMode mode, double max_val) {
  const double e = mse(a, b, mode);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / e);
}

double ssim_plane(std::span<const double> a, std::span<const double> b, int width, int height,
                  const SsimParams& p) {
  if (width < p.window || height < p.window) {
    throw ShapeError("ssim: image " + std::to_string(width) + "x" + std::to_string(height) +
                     " is smaller than the " + std::to_string(p.window) + "x" +
                     std::to_string(p.window) + " window; resize it first");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (a.size() != n || b.size() != n) throw ShapeError("ssim: plane size mismatch");

  std::vector<double> k(p.window);
  double ksum = 0.0;
  const int r = p.window / 2;
  for (int i = 0; i < p.window; ++i) {
    k[i] = std::exp(-static_cast<double>((i - r) * (i - r)) / (2.0 * p.sigma * p.sigma));
    ksum += k[i];
  }
  for (auto& v : k) v /= ksum;

  std::vector<double> va(a.begin(), a.end()), vb(b.begin(), b.end());
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = filter_valid(va, width, height, k);
  const auto mu_b = filter_valid(vb, width, height, k);
  const auto e_aa = filter_valid(aa, width, height, k);
  const auto e_bb = filter_valid(bb, width, height, k);
  const auto e_ab = filter_valid(ab, width, height, k);

  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(mu_a.size());
}

double ssim(const Image8& a, const Image8& b, ChannelMode mode, const SsimParams& p) {
  check_pair(a, b);
  const auto pa = to_planes(a, mode), pb = to_planes(b, mode);
  double acc = 0.0;
  for (std::size_t c = 0; c < pa.size(); ++c) {
    acc += ssim_plane(pa[c], pb[c], a.width, a.height, p);
  }
  return acc / static_cast<double>(pa.size());
}

void MetricReport::add(ImageMetric m) {
  per_image.push_back(std::move(m));
  finalize();
}

void MetricReport::finalize() {
  double psum = 0.0, ssum = 0.0;
  std::size_t finite = 0;
  count = infinite_psnr = failed = 0;
  for (const auto& m : per_image) {
    if (!m.error.empty()) {
      ++failed;
      continue;
    }
    ++count;
    ssum += m.ssim;
    if (std::isinf(m.psnr_db)) {
      ++infinite_psnr;
    } else {
      psum += m.psnr_db;
      ++finite;
    }
  }
  mean_psnr = finite ? psum / static_cast<double>(finite) : 0.0;
  mean_ssim = count ? ssum / static_cast<double>(count) : 0.0;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& m : per_image) {
    nlohmann::json j{{"path", m.path}};
    if (!m.error.empty()) {
      j["error"] = m.error;
    } else {
      if (std::isinf(m.psnr_db)) {
        j["psnr_db"] = "inf";
      } else {
        j["psnr_db"] = m.psnr_db;
      }
      j["ssim"] = m.ssim;
    }
    items.push_back(std::move(j));
  }
  return {{"mean_psnr", mean_psnr},
          {"mean_ssim", mean_ssim},
          {"count", count},
          {"infinite_psnr_excluded", infinite_psnr},
          {"failed", failed},
          {"channel_mode", to_string(channel_mode)},
          {"geometry", geometry},
          {"per_image", std::move(items)}};
}

std::string MetricReport::to_table() const {
  std::ostringstream os;
  char line[512];
  std::snprintf(line, sizeof(line), "%-48s %10s %8s\n", "image", "PSNR(dB)", "SSIM");
  os << line;
  for (const auto& m : per_image) {
    if (!m.error.empty()) {
      std::snprintf(line, sizeof(line), "%-48s %19s\n", m.path.c_str(), "skipped");
    } else if (std::isinf(m.psnr_db)) {
      std::snprintf(line, sizeof(line), "%-48s %10s %8.4f\n", m.path.c_str(), "inf", m.ssim);
    } else {
      std::snprintf(line, sizeof(line), "%-48s %10.2f %8.4f\n", m.path.c_str(), m.psnr_db,
                    m.ssim);
    }
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-48s %10.2f %8.4f\n", "mean", mean_psnr, mean_ssim);
  os << line;
  os << "count=" << count << " inf_excluded=" << infinite_psnr << " failed=" << failed
     << " channel=" << to_string(channel_mode) << "\n";
  return os.str();
}

}  // namespace ccl_derain
