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

#include "ccl_derain/networks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "ccl_derain/errors.hpp"
#include "ccl_derain/rng.hpp"

namespace ccl_derain {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

nn::Conv2dOptions conv(int64_t in, int64_t out, int64_t k, int64_t stride = 1,
                       int64_t pad = 0) {
  return nn::Conv2dOptions(in, out, k).stride(stride).padding(pad).bias(true);
}

const std::vector<double> kClipMean = {0.48145466, 0.4578275, 0.40821073};
const std::vector<double> kClipStd = {0.26862954, 0.26130258, 0.27577711};

}  // namespace

std::uint64_t tensor_checksum(const std::vector<torch::Tensor>& tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tensors) {
    auto c = t.detach().to(torch::kCPU).contiguous();
    h = fnv1a(h, c.data_ptr(), c.numel() * c.element_size());
  }
  return h;
}

void init_gaussian(nn::Module& module, std::uint64_t seed, double stddev) {
  torch::NoGradGuard guard;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& item : module.named_parameters()) {
    auto& p = item.value();
    const std::string& name = item.key();
    const bool is_bias = name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0;
    if (is_bias) {
      p.zero_();
    } else {
      auto noise = torch::randn(p.sizes(), gen, torch::TensorOptions().dtype(torch::kFloat64));
      p.copy_(noise.mul(stddev).to(p.options()));
    }
  }
}

std::uint64_t parameter_checksum(const nn::Module& module) {
  return tensor_checksum(module.parameters());
}

// --- generator -------------------------------------------------------------

ResnetBlockImpl::ResnetBlockImpl(int channels) {
  body_ = nn::Sequential(
      nn::ReflectionPad2d(1), nn::Conv2d(conv(channels, channels, 3)),
      nn::InstanceNorm2d(channels), nn::ReLU(),
      nn::ReflectionPad2d(1), nn::Conv2d(conv(channels, channels, 3)),
      nn::InstanceNorm2d(channels));
  register_module("body", body_);
}

torch::Tensor ResnetBlockImpl::forward(const torch::Tensor& x) { return x + body_->forward(x); }

ResnetGeneratorImpl::ResnetGeneratorImpl(GeneratorSpec spec) : spec_(spec) {
  if (spec_.num_residual_blocks < 1) throw ConfigError("generator needs >= 1 residual block");
  if (spec_.base_channels < 1 || spec_.downsample_stages < 0) {
    throw ConfigError("invalid generator spec");
  }
  const int ngf = spec_.base_channels;
  stem_ = nn::Sequential(nn::ReflectionPad2d(3), nn::Conv2d(conv(3, ngf, 7)),
                         nn::InstanceNorm2d(ngf), nn::ReLU());
  register_module("stem", stem_);
  int ch = ngf;
  for (int k = 0; k < spec_.downsample_stages; ++k) {
    auto s = nn::Sequential(nn::Conv2d(conv(ch, ch * 2, 3, 2, 1)), nn::InstanceNorm2d(ch * 2),
                            nn::ReLU());
    downs_.push_back(register_module("down" + std::to_string(k), s));
    ch *= 2;
  }
  for (int j = 0; j < spec_.num_residual_blocks; ++j) {
    blocks_.push_back(register_module("block" + std::to_string(j), ResnetBlock(ch)));
  }
  for (int k = 0; k < spec_.downsample_stages; ++k) {
    auto s = nn::Sequential(
        nn::ConvTranspose2d(
            nn::ConvTranspose2dOptions(ch, ch / 2, 3).stride(2).padding(1).output_padding(1)),
        nn::InstanceNorm2d(ch / 2), nn::ReLU());
    ups_.push_back(register_module("up" + std::to_string(k), s));
    ch /= 2;
  }
  out_ = nn::Sequential(nn::ReflectionPad2d(3), nn::Conv2d(conv(ch, 3, 7)), nn::Tanh());
  register_module("out", out_);
}

int64_t ResnetGeneratorImpl::num_taps() const {
  return 2 + spec_.downsample_stages + spec_.num_residual_blocks;
}

int64_t ResnetGeneratorImpl::tap_channels(int64_t tap) const {
  if (tap < 0 || tap >= num_taps()) {
    throw ConfigError("generator tap " + std::to_string(tap) + " out of range [0, " +
                      std::to_string(num_taps() - 1) + "]");
  }
  if (tap == 0) return 3;
  const int64_t stage = std::min<int64_t>(tap - 1, spec_.downsample_stages);
  return static_cast<int64_t>(spec_.base_channels) << stage;
}

void ResnetGeneratorImpl::check_input(const torch::Tensor& x) const {
  if (x.dim() != 4 || x.size(1) != 3) throw ShapeError("generator expects [b,3,h,w]");
  const int64_t m = int64_t{1} << spec_.downsample_stages;
  if (x.size(2) % m != 0 || x.size(3) % m != 0) {
    throw ShapeError("generator input " + std::to_string(x.size(2)) + "x" +
                     std::to_string(x.size(3)) + " is not divisible by " + std::to_string(m));
  }
}

void ResnetGeneratorImpl::check_taps(const std::vector<int64_t>& taps) const {
  for (auto t : taps) (void)tap_channels(t);
}

torch::Tensor ResnetGeneratorImpl::run(const torch::Tensor& x, const std::vector<int64_t>& taps,
                                       std::vector<torch::Tensor>* feats, bool encoder_only) {
  check_input(x);
  check_taps(taps);
  const int64_t last = taps.empty() ? -1 : *std::max_element(taps.begin(), taps.end());
  if (feats) feats->assign(taps.size(), torch::Tensor());
  int64_t id = 0;
  auto record = [&](const torch::Tensor& h) {
    if (feats) {
      for (std::size_t i = 0; i < taps.size(); ++i) {
        if (taps[i] == id) (*feats)[i] = h;
      }
    }
    return encoder_only && id >= last;
  };

  torch::Tensor h = x;
  if (record(h)) return h;
  h = stem_->forward(h);
  ++id;
  if (record(h)) return h;
  for (auto& d : downs_) {
    h = d->forward(h);
    ++id;
    if (record(h)) return h;
  }
  for (auto& b : blocks_) {
    h = b->forward(h);
    ++id;
    if (record(h)) return h;
  }
  for (auto& u : ups_) h = u->forward(h);
  return out_->forward(h);
}

torch::Tensor ResnetGeneratorImpl::forward(const torch::Tensor& x) {
  return run(x, {}, nullptr, false);
}

std::vector<torch::Tensor> ResnetGeneratorImpl::encode(const torch::Tensor& x,
                                                       const std::vector<int64_t>& taps) {
  std::vector<torch::Tensor> feats;
  run(x, taps, &feats, true);
  return feats;
}

std::pair<torch::Tensor, std::vector<torch::Tensor>> ResnetGeneratorImpl::forward_with_taps(
    const torch::Tensor& x, const std::vector<int64_t>& taps) {
  std::vector<torch::Tensor> feats;
  auto y = run(x, taps, &feats, false);
  return {y, feats};
}

ResnetGenerator build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
  ResnetGenerator g(spec);
  init_gaussian(*g, seed);
  return g;
}

// --- discriminator ---------------------------------------------------------

PatchDiscriminatorImpl::PatchDiscriminatorImpl(DiscriminatorSpec spec) : spec_(spec) {
  if (spec_.num_layers < 1 || spec_.base_channels < 1) {
    throw ConfigError("invalid discriminator spec");
  }
  const int64_t ndf = spec_.base_channels;
  auto lrelu = [] { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)); };
  down_.push_back(register_module(
      "down0", nn::Sequential(nn::Conv2d(conv(3, ndf, 4, 2, 1)), lrelu())));
  for (int k = 1; k < spec_.num_layers; ++k) {
    const int64_t in = tap_channels(k - 1), out = tap_channels(k);
    down_.push_back(register_module(
        "down" + std::to_string(k),
        nn::Sequential(nn::Conv2d(conv(in, out, 4, 2, 1)), nn::InstanceNorm2d(out), lrelu())));
  }
  const int64_t in = tap_channels(spec_.num_layers - 1);
  const int64_t mid = ndf * std::min<int64_t>(int64_t{1} << spec_.num_layers, 8);
  tail_ = nn::Sequential(nn::Conv2d(conv(in, mid, 4, 1, 1)), nn::InstanceNorm2d(mid), lrelu(),
                         nn::Conv2d(conv(mid, 1, 4, 1, 1)));
  register_module("tail", tail_);
}

int64_t PatchDiscriminatorImpl::tap_channels(int64_t tap) const {
  if (tap < 0 || tap >= spec_.num_layers) throw ConfigError("discriminator tap out of range");
  return spec_.base_channels * std::min<int64_t>(int64_t{1} << tap, 8);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) throw ShapeError("discriminator expects [b,3,h,w]");
  torch::Tensor h = x;
  for (auto& d : down_) h = d->forward(h);
  return tail_->forward(h);
}

std::vector<torch::Tensor> PatchDiscriminatorImpl::encode(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) throw ShapeError("discriminator expects [b,3,h,w]");
  std::vector<torch::Tensor> feats;
  torch::Tensor h = x;
  for (auto& d : down_) {
    h = d->forward(h);
    feats.push_back(h);
  }
  return feats;
}

PatchDiscriminator build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed) {
  PatchDiscriminator d(spec);
  init_gaussian(*d, seed);
  return d;
}

int64_t patch_map_size(int64_t input_size, int num_layers) {
  int64_t s = input_size;
  for (int k = 0; k < num_layers; ++k) s = (s + 2 - 4) / 2 + 1;
  return s - 2;  // two stride-1 4x4 convs with padding 1
}

// --- projection heads ------------------------------------------------------

ProjectionHeadImpl::ProjectionHeadImpl(int64_t in_dim, int64_t hidden_dim, int64_t out_dim) {
  fc1_ = register_module("fc1", nn::Linear(in_dim, hidden_dim));
  fc2_ = register_module("fc2", nn::Linear(hidden_dim, out_dim));
}

torch::Tensor ProjectionHeadImpl::forward(const torch::Tensor& x) {
  return fc2_->forward(torch::relu(fc1_->forward(x)));
}

HeadSetImpl::HeadSetImpl(std::vector<int64_t> taps, const std::vector<int64_t>& in_channels,
                         int64_t hidden_dim, int64_t out_dim)
    : taps_(std::move(taps)) {
  if (taps_.size() != in_channels.size()) throw ContractError("one channel count per tap");
  for (std::size_t i = 0; i < taps_.size(); ++i) {
    heads_.push_back(register_module("head" + std::to_string(i),
                                     ProjectionHead(in_channels[i], hidden_dim, out_dim)));
  }
}

ProjectionHead HeadSetImpl::head(std::size_t i) const { return heads_.at(i); }

HeadSet build_content_heads(const ResnetGeneratorImpl& gen, std::vector<int64_t> taps,
                            int64_t dim, std::uint64_t seed) {
  std::vector<int64_t> ch;
  for (auto t : taps) ch.push_back(gen.tap_channels(t));
  HeadSet heads(std::move(taps), ch, dim, dim);
  init_gaussian(*heads, seed);
  return heads;
}

HeadSet build_discriminant_heads(const PatchDiscriminatorImpl& disc, int64_t dim,
                                 std::uint64_t seed) {
  std::vector<int64_t> taps, ch;
  for (int64_t t = 0; t < disc.num_taps(); ++t) {
    taps.push_back(t);
    ch.push_back(disc.tap_channels(t));
  }
  HeadSet heads(std::move(taps), ch, dim, dim);
  init_gaussian(*heads, seed);
  return heads;
}

// --- patch sampling ----------------------------------------------------------

std::vector<std::pair<int64_t, int64_t>> PatchFeatureSet::sampled_locations() const {
  std::vector<std::pair<int64_t, int64_t>> out;
  for (const auto& l : layers) {
    auto idx = l.flat_indices.to(torch::kCPU).contiguous();
    const auto* p = idx.data_ptr<int64_t>();
    for (int64_t i = 0; i < idx.numel(); ++i) out.emplace_back(l.layer_id, p[i]);
  }
  return out;
}

PatchFeatureSet project_patches(const std::vector<torch::Tensor>& feats, HeadSetImpl& heads,
                                int64_t num_locations, std::uint64_t seed,
                                const PatchFeatureSet* replay) {
  if (feats.size() != heads.size()) throw ContractError("one feature map per head expected");
  if (replay && replay->layers.size() != feats.size()) {
    throw ContractError("replayed locations cover a different number of layers");
  }
  const SeedTree seeds(seed);
  PatchFeatureSet out;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto& f = feats[i];
    const int64_t layer_id = heads.taps()[i];
    const int64_t hw = f.size(2) * f.size(3);
    torch::Tensor idx;
    if (replay) {
      const auto& rl = replay->layers[i];
      if (rl.layer_id != layer_id) throw ContractError("replayed layer ids do not match");
      idx = rl.flat_indices;
      if (idx.numel() > 0 && idx.max().item<int64_t>() >= hw) {
        throw ContractError("replayed location outside the feature map");
      }
    } else {
      int64_t p = num_locations;
      if (p > hw) {
        log_warning("layer " + std::to_string(layer_id) + ": " + std::to_string(num_locations) +
                    " locations requested but only " + std::to_string(hw) + " exist; capping");
        p = hw;
      }
      auto gen = seeds.torch_generator("patch-locations", {layer_id});
      idx = torch::randperm(hw, gen, torch::TensorOptions().dtype(torch::kInt64)).slice(0, 0, p);
    }
    auto flat = f.flatten(2).permute({0, 2, 1});  // [b, hw, c]
    auto picked = flat.index_select(1, idx.to(f.device()));
    auto proj = heads.head(i)->forward(picked);
    proj = proj / (proj.norm(2, -1, true) + 1e-7);
    out.layers.push_back(PatchLayer{layer_id, idx, proj});
  }
  return out;
}

PatchFeatureSet encode_content(ResnetGeneratorImpl& gen, HeadSetImpl& heads,
                               const ImageTensor& img, int64_t num_locations,
                               std::uint64_t seed) {
  return project_patches(gen.encode(img, heads.taps()), heads, num_locations, seed);
}

PatchFeatureSet encode_content_replay(ResnetGeneratorImpl& gen, HeadSetImpl& heads,
                                      const ImageTensor& img, const PatchFeatureSet& recorded) {
  return project_patches(gen.encode(img, heads.taps()), heads, 0, 0, &recorded);
}

std::vector<torch::Tensor> encode_discriminant(PatchDiscriminatorImpl& disc, HeadSetImpl& heads,
                                               const ImageTensor& img, bool stop_grad_disc) {
  auto feats = disc.encode(img);
  if (feats.size() != heads.size()) throw ContractError("one discriminant head per tap expected");
  std::vector<torch::Tensor> out;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    auto f = stop_grad_disc ? feats[i].detach() : feats[i];
    out.push_back(heads.head(i)->forward(f.mean({2, 3})));
  }
  return out;
}

// --- semantic encoders -----------------------------------------------------

torch::Tensor to_clip_input(const torch::Tensor& img, int64_t size) {
  auto x = (img + 1.0) * 0.5;
  if (x.size(2) != size || x.size(3) != size) {
    const bool shrinking = x.size(2) > size || x.size(3) > size;
    x = F::interpolate(x, F::InterpolateFuncOptions()
                              .size(std::vector<int64_t>{size, size})
                              .mode(torch::kBilinear)
                              .align_corners(false)
                              .antialias(shrinking));
  }
  auto opts = x.options().requires_grad(false);
  auto mean = torch::tensor(kClipMean, opts.dtype(torch::kFloat64)).to(opts).view({1, 3, 1, 1});
  auto std = torch::tensor(kClipStd, opts.dtype(torch::kFloat64)).to(opts).view({1, 3, 1, 1});
  return (x - mean) / std;
}

StandInSemanticEncoder::StandInSemanticEncoder(std::uint64_t seed, int64_t input_size,
                                               int64_t embedding_dim, SemanticTap tap)
    : input_size_(input_size), dim_(embedding_dim), tap_(tap) {
  if (input_size_ < 16 || dim_ < 1) throw ConfigError("invalid stand-in encoder size");
  trunk_ = nn::Sequential(nn::Conv2d(conv(3, 32, 3, 2, 1)), nn::ReLU(),
                          nn::Conv2d(conv(32, 64, 3, 2, 1)), nn::ReLU(),
                          nn::Conv2d(conv(64, 128, 3, 2, 1)), nn::ReLU());
  last_ = nn::Conv2d(conv(128, dim_, 3, 2, 1));
  // He-scaled weights keep activations O(1) through the frozen stack.
  torch::NoGradGuard guard;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  auto init = [&](nn::Module& m) {
    for (auto& item : m.named_parameters()) {
      auto& p = item.value();
      if (p.dim() > 1) {
        const double fan_in = static_cast<double>(p.size(1) * p.size(2) * p.size(3));
        p.copy_(torch::randn(p.sizes(), gen, p.options()).mul(std::sqrt(2.0 / fan_in)));
      } else {
        p.zero_();
      }
      p.set_requires_grad(false);
    }
  };
  init(*trunk_);
  init(*last_);
  trunk_->eval();
  last_->eval();
}

int64_t StandInSemanticEncoder::embedding_dim() const {
  return tap_ == SemanticTap::kPooled ? dim_ : 128;
}

torch::Tensor StandInSemanticEncoder::embed(const ImageTensor& img) {
  if (img.dim() != 4 || img.size(1) != 3) throw ShapeError("semantic encoder expects [b,3,h,w]");
  auto h = trunk_->forward(to_clip_input(img, input_size_));
  if (tap_ == SemanticTap::kPenultimate) return h.mean({2, 3});
  return last_->forward(h).mean({2, 3});
}

std::uint64_t StandInSemanticEncoder::checksum() const {
  auto ps = trunk_->parameters();
  auto last = last_->parameters();
  ps.insert(ps.end(), last.begin(), last.end());
  return tensor_checksum(ps);
}

void StandInSemanticEncoder::to(torch::Device device) {
  trunk_->to(device);
  last_->to(device);
}

void StandInSemanticEncoder::to(torch::Device device, torch::Dtype dtype) {
  trunk_->to(device, dtype);
  last_->to(device, dtype);
}

std::filesystem::path resolve_pretrained_weights(const std::string& weights) {
  std::filesystem::path p;
  if (!weights.empty()) {
    p = weights;
  } else if (const char* cache = std::getenv("CCL_DERAIN_CACHE"); cache && *cache) {
    p = std::filesystem::path(cache) / "clip_visual.pt";
  } else {
    throw BackendUnavailableError(
        "pretrained semantic encoder requested but neither semantic.weights nor "
        "CCL_DERAIN_CACHE is set; use semantic.backend=standin for the frozen stand-in encoder");
  }
  if (!std::filesystem::exists(p)) {
    throw BackendUnavailableError(
        "pretrained semantic encoder weights not found at " + p.string() +
        "; export a TorchScript image tower there or use semantic.backend=standin");
  }
  return p;
}

ScriptedSemanticEncoder::ScriptedSemanticEncoder(const std::filesystem::path& weights,
                                                 int64_t input_size, SemanticTap tap)
    : input_size_(input_size), tap_(tap) {
  try {
    module_ = torch::jit::load(weights.string());
  } catch (const c10::Error& e) {
    throw BackendUnavailableError("cannot load TorchScript encoder " + weights.string() + ": " +
                                  e.what_without_backtrace() +
                                  "; use semantic.backend=standin instead");
  }
  module_.eval();
  for (auto p : module_.parameters()) p.set_requires_grad(false);
  if (tap_ == SemanticTap::kPenultimate && !module_.find_method("encode_penultimate")) {
    throw BackendUnavailableError(
        "semantic.tap=penultimate needs an encode_penultimate method in " + weights.string());
  }
  torch::NoGradGuard guard;
  dim_ = run(torch::zeros({1, 3, input_size_, input_size_})).size(1);
}

torch::Tensor ScriptedSemanticEncoder::run(const torch::Tensor& x) {
  torch::Tensor out;
  if (tap_ == SemanticTap::kPenultimate) {
    out = module_.get_method("encode_penultimate")({x}).toTensor();
  } else {
    out = module_.forward({x}).toTensor();
  }
  if (out.dim() != 2) throw ShapeError("semantic encoder must return [b, dim]");
  return out;
}

torch::Tensor ScriptedSemanticEncoder::embed(const ImageTensor& img) {
  if (img.dim() != 4 || img.size(1) != 3) throw ShapeError("semantic encoder expects [b,3,h,w]");
  return run(to_clip_input(img, input_size_));
}

std::uint64_t ScriptedSemanticEncoder::checksum() const {
  std::vector<torch::Tensor> ps;
  for (const auto& p : module_.parameters()) ps.push_back(p);
  return tensor_checksum(ps);
}

}  // namespace ccl_derain
