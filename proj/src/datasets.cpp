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

#include "ccl_derain/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "ccl_derain/errors.hpp"

namespace ccl_derain {

namespace F = torch::nn::functional;

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}


// Decodes every listed file, dropping (with a warning) the ones that fail.
std::vector<fs::path> keep_decodable(const std::vector<fs::path>& paths,
                                     std::vector<Image8>* cache,
                                     const fs::path& dir) {
  std::vector<fs::path> ok;
  for (const auto& p : paths) {
    auto img = read_image(p);
    if (!img) {
      log_warning("skipping undecodable image " + p.string());
      continue;
    }
    ok.push_back(p);
    if (cache) cache->push_back(std::move(*img));
  }
  if (ok.empty()) {
    throw EmptyDatasetError("no decodable images in " + dir.string());
  }
  return ok;
}

Image8 fetch(const std::vector<fs::path>& paths, const std::vector<Image8>& cache,
             std::size_t i) {
  if (i >= paths.size()) throw std::out_of_range("dataset index out of range");
  if (!cache.empty()) return cache[i];
  auto img = read_image(paths[i]);
  if (!img) throw InputError("failed to decode " + paths[i].string());
  return *img;
}

torch::Tensor image_to_float_chw(const Image8& image) {
  if (image.empty()) throw InputError("preprocess: empty image");
  if (image.channels != 3) {
    throw InputError("preprocess: expected 3 channels, got " +
                     std::to_string(image.channels));
  }
  auto hwc = torch::from_blob(const_cast<std::uint8_t*>(image.data.data()),
                              {image.height, image.width, 3}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).unsqueeze(0).contiguous();
}

std::vector<float> gaussian_kernel(double sigma) {
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

void blur_layer(std::vector<float>& layer, int h, int w, double sigma) {
  if (sigma <= 0.0) return;
  auto k = gaussian_kernel(sigma);
  int r = static_cast<int>(k.size() / 2);
  std::vector<float> tmp(layer.size(), 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) {
        int xx = std::clamp(x + i, 0, w - 1);
        acc += k[i + r] * layer[y * w + xx];
      }
      tmp[y * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) {
        int yy = std::clamp(y + i, 0, h - 1);
        acc += k[i + r] * tmp[yy * w + x];
      }
      layer[y * w + x] = acc;
    }
  }
}

}  // namespace

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ConfigError("data directory does not exist: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && has_image_extension(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw EmptyDatasetError("no images found in " + dir.string());
  return out;
}

UnpairedDataset::UnpairedDataset(std::vector<fs::path> rainy, std::vector<fs::path> clean,
                                 std::vector<Image8> rainy_cache,
                                 std::vector<Image8> clean_cache)
    : rainy_paths_(std::move(rainy)),
      clean_paths_(std::move(clean)),
      rainy_cache_(std::move(rainy_cache)),
      clean_cache_(std::move(clean_cache)) {
  if (rainy_paths_.empty() || clean_paths_.empty()) {
    throw EmptyDatasetError("unpaired dataset needs at least one rainy and one clean image");
  }
  if ((!rainy_cache_.empty() && rainy_cache_.size() != rainy_paths_.size()) ||
      (!clean_cache_.empty() && clean_cache_.size() != clean_paths_.size())) {
    throw ContractError("decoded cache size does not match path list");
  }
}

Image8 UnpairedDataset::rainy(std::size_t i) const { return fetch(rainy_paths_, rainy_cache_, i); }
Image8 UnpairedDataset::clean(std::size_t i) const { return fetch(clean_paths_, clean_cache_, i); }

UnpairedDataset load_unpaired(const fs::path& root, const DataLayout& layout,
                              bool keep_decoded) {
  if (!fs::is_directory(root)) {
    throw ConfigError("dataset root does not exist: " + root.string());
  }
  const fs::path rainy_dir = root / layout.rainy_subdir;
  const fs::path clean_dir = root / layout.clean_subdir;
  auto rainy_listed = list_images(rainy_dir);
  auto clean_listed = list_images(clean_dir);
  std::vector<Image8> rainy_cache, clean_cache;
  auto rainy = keep_decodable(rainy_listed, keep_decoded ? &rainy_cache : nullptr, rainy_dir);
  auto clean = keep_decodable(clean_listed, keep_decoded ? &clean_cache : nullptr, clean_dir);
  return UnpairedDataset(std::move(rainy), std::move(clean), std::move(rainy_cache),
                         std::move(clean_cache));
}

PairedEvalSet load_paired_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot open eval manifest " + manifest.string());
  const fs::path base = manifest.parent_path();
  PairedEvalSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a)) continue;
    if (!(ss >> b) || (ss >> extra)) {
      throw ConfigError(manifest.string() + ":" + std::to_string(lineno) +
                        ": expected two columns (rainy_path gt_path)");
    }
    fs::path pa(a), pb(b);
    if (pa.is_relative()) pa = base / pa;
    if (pb.is_relative()) pb = base / pb;
    set.pairs.emplace_back(pa, pb);
  }
  if (set.pairs.empty()) throw EmptyDatasetError("eval manifest is empty: " + manifest.string());
  return set;
}

std::vector<StepIndices> plan_epoch(const UnpairedDataset& ds, const SeedTree& seeds,
                                    std::int64_t epoch, std::int64_t batch_size) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> rainy(ds.num_rainy()), clean(ds.num_clean());
  std::iota(rainy.begin(), rainy.end(), 0);
  std::iota(clean.begin(), clean.end(), 0);
  auto rr = seeds.engine("epoch-order-rainy", {epoch});
  auto rc = seeds.engine("epoch-order-clean", {epoch});
  std::shuffle(rainy.begin(), rainy.end(), rr);
  std::shuffle(clean.begin(), clean.end(), rc);
  const std::size_t steps = ds.epoch_length() / static_cast<std::size_t>(batch_size);
  std::vector<StepIndices> plan(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::int64_t b = 0; b < batch_size; ++b) {
      plan[s].rainy.push_back(rainy[s * batch_size + b]);
      plan[s].clean.push_back(clean[s * batch_size + b]);
    }
  }
  return plan;
}

torch::Tensor pad_to_multiple(const torch::Tensor& t, int multiple) {
  if (multiple <= 1) return t;
  const auto h = t.size(2), w = t.size(3);
  const auto ph = (multiple - h % multiple) % multiple;
  const auto pw = (multiple - w % multiple) % multiple;
  if (ph == 0 && pw == 0) return t;
  // Reflection needs the pad to be smaller than the side.
  F::PadFuncOptions opts({0, pw, 0, ph});
  if (ph < h && pw < w) {
    opts.mode(torch::kReflect);
  } else {
    opts.mode(torch::kReplicate);
  }
  return F::pad(t, opts);
}

ImageTensor preprocess(const Image8& image, PreprocessMode mode, std::uint64_t seed,
                       const PreprocessOptions& opts) {
  auto t = image_to_float_chw(image);
  if (mode == PreprocessMode::kEval) {
    return pad_to_multiple(t.div(127.5).sub(1.0), opts.pad_multiple);
  }
  if (opts.crop_size < 1 || opts.load_size < opts.crop_size) {
    throw ConfigError("preprocess: need 1 <= crop_size <= load_size");
  }
  if (t.size(2) != opts.load_size || t.size(3) != opts.load_size) {
    t = F::interpolate(t, F::InterpolateFuncOptions()
                              .size(std::vector<int64_t>{opts.load_size, opts.load_size})
                              .mode(torch::kBilinear)
                              .align_corners(false)
                              .antialias(true));
    // Stay on the 8-bit lattice, as an 8-bit resize would.
    t = t.round().clamp(0, 255);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> off(0, opts.load_size - opts.crop_size);
  const int y0 = off(rng);
  const int x0 = off(rng);
  t = t.slice(2, y0, y0 + opts.crop_size).slice(3, x0, x0 + opts.crop_size);
  if (opts.flip && std::bernoulli_distribution(0.5)(rng)) t = t.flip({3});
  return t.div(127.5).sub(1.0).contiguous();
}

ImageTensor synth_rain(const ImageTensor& clean, const RainParams& params) {
  check_image_tensor(clean, "synth_rain");
  if (params.num_streaks < 0) throw InputError("synth_rain: num_streaks must be >= 0");
  if (params.streak_intensity < 0.0 || params.streak_intensity > 1.0) {
    throw InputError("synth_rain: streak_intensity must lie in [0,1]");
  }
  if (params.num_streaks == 0 || params.streak_intensity == 0.0) return clean.clone();

  const int h = static_cast<int>(clean.size(2));
  const int w = static_cast<int>(clean.size(3));
  std::vector<float> layer(static_cast<std::size_t>(h) * w, 0.0f);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> ux(0.0, w), uy(-params.streak_length, h);
  std::uniform_real_distribution<double> ulen(0.7, 1.3), uang(-6.0, 6.0), uamp(0.6, 1.0);

  auto splat = [&](double px, double py, float amp) {
    const int xi = static_cast<int>(std::floor(px));
    const int yi = static_cast<int>(std::floor(py));
    const double fx = px - xi, fy = py - yi;
    const double wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {xi, xi + 1, xi, xi + 1};
    const int ys[4] = {yi, yi, yi + 1, yi + 1};
    for (int k = 0; k < 4; ++k) {
      if (xs[k] < 0 || xs[k] >= w || ys[k] < 0 || ys[k] >= h) continue;
      float& v = layer[static_cast<std::size_t>(ys[k]) * w + xs[k]];
      v = std::max(v, static_cast<float>(amp * wts[k]));
    }
  };

  for (int s = 0; s < params.num_streaks; ++s) {
    const double x0 = ux(rng), y0 = uy(rng);
    const double len = params.streak_length * ulen(rng);
    const double theta = (params.streak_angle + uang(rng)) * std::numbers::pi / 180.0;
    const float amp = static_cast<float>(uamp(rng));
    const double dx = std::cos(theta), dy = std::sin(theta);
    for (double t = 0.0; t <= len; t += 0.25) splat(x0 + t * dx, y0 + t * dy, amp);
  }
  blur_layer(layer, h, w, params.blur_sigma);

  auto rain = torch::from_blob(layer.data(), {1, 1, h, w}, torch::kFloat32).clone();
  rain = rain.mul(2.0 * params.streak_intensity).to(clean.dtype());
  return (clean + rain).clamp(-1.0, 1.0);
}

Image8 make_toy_scene(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> col(30, 190);
  auto color = [&] { return std::array<int, 3>{col(rng), col(rng), col(rng)}; };
  Image8 img(size, size, 3);

  const auto sky_top = color(), sky_bottom = color(), ground = color();
  const int horizon = std::uniform_int_distribution<int>(size / 3, 2 * size / 3)(rng);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        int v;
        if (y < horizon) {
          const double a = static_cast<double>(y) / std::max(1, horizon - 1);
          v = static_cast<int>(std::lround((1 - a) * sky_top[c] + a * sky_bottom[c]));
        } else {
          v = ground[c] - (y - horizon) / 4;
        }
        img.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  }

  const int blocks = std::uniform_int_distribution<int>(3, 6)(rng);
  for (int b = 0; b < blocks; ++b) {
    const auto c = color();
    const int bw = std::uniform_int_distribution<int>(size / 10, size / 3)(rng);
    const int bh = std::uniform_int_distribution<int>(size / 6, 2 * size / 3)(rng);
    const int bx = std::uniform_int_distribution<int>(0, size - bw)(rng);
    const int base = std::uniform_int_distribution<int>(horizon, size)(rng);
    for (int y = std::max(0, base - bh); y < std::min(size, base); ++y) {
      for (int x = bx; x < bx + bw; ++x) {
        for (int k = 0; k < 3; ++k) img.at(y, x, k) = static_cast<std::uint8_t>(c[k]);
      }
    }
  }

  const int discs = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int d = 0; d < discs; ++d) {
    const auto c = color();
    const int r = std::uniform_int_distribution<int>(size / 16 + 1, size / 6 + 1)(rng);
    const int cx = std::uniform_int_distribution<int>(0, size - 1)(rng);
    const int cy = std::uniform_int_distribution<int>(0, size - 1)(rng);
    for (int y = std::max(0, cy - r); y <= std::min(size - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(size - 1, cx + r); ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > r * r) continue;
        for (int k = 0; k < 3; ++k) img.at(y, x, k) = static_cast<std::uint8_t>(c[k]);
      }
    }
  }
  return img;
}

void make_toy_dataset(const fs::path& root, const ToyDataOptions& opts) {
  if (opts.num_train < 1 || opts.num_test < 0 || opts.size < 1) {
    throw ConfigError("make_toy_dataset: invalid sizes");
  }
  const SeedTree seeds(opts.seed);
  auto name = [](int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d.png", i);
    return std::string(buf);
  };
  auto rainify = [&](const Image8& scene, std::uint64_t rain_seed) {
    RainParams p = opts.rain;
    p.seed = rain_seed;
    return to_image8(synth_rain(to_tensor(scene), p));
  };

  // Train split: rainy and clean images come from disjoint scenes.
  for (int i = 0; i < opts.num_train; ++i) {
    write_image(root / "train" / "clean" / name(i),
                make_toy_scene(opts.size, seeds.child("train-clean-scene", {i})));
    write_image(root / "train" / "rainy" / name(i),
                rainify(make_toy_scene(opts.size, seeds.child("train-rainy-scene", {i})),
                        seeds.child("train-rain", {i})));
  }

  fs::create_directories(root / "test");
  std::ofstream manifest(root / "test" / "manifest.txt");
  for (int i = 0; i < opts.num_test; ++i) {
    const Image8 scene = make_toy_scene(opts.size, seeds.child("test-scene", {i}));
    write_image(root / "test" / "clean" / name(i), scene);
    write_image(root / "test" / "rainy" / name(i), rainify(scene, seeds.child("test-rain", {i})));
    manifest << "rainy/" << name(i) << ' ' << "clean/" << name(i) << '\n';
  }
  if (!manifest) throw std::runtime_error("failed to write toy manifest");
}

}  // namespace ccl_derain
