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

#include "ccl_derain/evaluation.hpp"

#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ccl_derain/errors.hpp"

namespace ccl_derain {

DerainModel DerainModel::identity() { return DerainModel(); }

DerainModel::DerainModel(ResnetGenerator generator, torch::Device device)
    : generator_(std::move(generator)), device_(device) {
  generator_->to(device_);
  generator_->eval();
}

DerainModel DerainModel::from_checkpoint(const std::filesystem::path& dir, torch::Device device) {
  const auto manifest_path = dir / "manifest.json";
  const auto weights = dir / "G_n.pt";
  if (!std::filesystem::is_regular_file(manifest_path) ||
      !std::filesystem::is_regular_file(weights)) {
    throw InputError("not a checkpoint directory: " + dir.string());
  }
  nlohmann::json m;
  try {
    std::ifstream in(manifest_path);
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("unreadable checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  GeneratorSpec spec;
  const auto& g = m.at("generator");
  spec.num_residual_blocks = g.at("residual_blocks").get<int>();
  spec.base_channels = g.at("base_channels").get<int>();
  spec.downsample_stages = g.at("downsample_stages").get<int>();
  ResnetGenerator gen(spec);
  try {
    torch::load(gen, weights.string());
  } catch (const c10::Error& e) {
    throw InputError("cannot load " + weights.string() + ": " + e.what_without_backtrace());
  }
  return DerainModel(gen, device);
}

std::uint64_t DerainModel::checksum() const {
  return generator_ ? parameter_checksum(*generator_) : 0;
}

Image8 DerainModel::derain(const Image8& rainy) const {
  if (!generator_) return rainy;
  torch::NoGradGuard guard;
  const int multiple = 1 << generator_->spec().downsample_stages;
  auto x = pad_to_multiple(to_tensor(rainy), multiple).to(device_);
  auto y = generator_->forward(x).to(torch::kCPU);
  y = y.slice(2, 0, rainy.height).slice(3, 0, rainy.width);
  return to_image8(y);
}

MetricReport evaluate(const DerainModel& model, const PairedEvalSet& eval_set, ChannelMode mode,
                      const std::optional<std::filesystem::path>& dump_dir) {
  MetricReport report;
  report.channel_mode = mode;
  report.geometry = "native resolution, reflect-padded to the generator stride and cropped back";
  for (const auto& [rainy_path, gt_path] : eval_set.pairs) {
    ImageMetric m;
    m.path = rainy_path.string();
    const auto rainy = read_image(rainy_path);
    const auto gt = read_image(gt_path);
    if (!rainy || !gt) {
      m.error = "cannot decode " + (!rainy ? rainy_path : gt_path).string();
      log_warning(m.error);
      report.per_image.push_back(std::move(m));
      continue;
    }
    try {
      const Image8 out = model.derain(*rainy);
      m.psnr_db = psnr(out, *gt, mode);
      m.ssim = ssim(out, *gt, mode);
      if (dump_dir) write_image(*dump_dir / rainy_path.filename().replace_extension(".png"), out);
    } catch (const ShapeError& e) {
      m.error = e.what();
      log_warning(m.path + ": " + m.error);
    }
    report.per_image.push_back(std::move(m));
  }
  report.finalize();
  return report;
}

std::vector<std::filesystem::path> infer_directory(const DerainModel& model,
                                                   const std::filesystem::path& input_dir,
                                                   const std::filesystem::path& output_dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& p : list_images(input_dir)) {
    const auto img = read_image(p);
    if (!img) {
      log_warning("skipping undecodable image " + p.string());
      continue;
    }
    auto out = output_dir / p.filename().replace_extension(".png");
    write_image(out, model.derain(*img));
    written.push_back(std::move(out));
  }
  if (written.empty()) throw EmptyDatasetError("no decodable images in " + input_dir.string());
  return written;
}

}  // namespace ccl_derain
