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

#ifndef CCL_DERAIN_NETWORKS_HPP_
#define CCL_DERAIN_NETWORKS_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <torch/script.h>
#include <torch/torch.h>

#include "ccl_derain/image.hpp"

namespace ccl_derain {

struct GeneratorSpec {
  int num_residual_blocks = 9;
  int base_channels = 64;
  int downsample_stages = 2;
};

struct DiscriminatorSpec {
  int num_layers = 3;  // stride-2 stages; two stride-1 convs follow
  int base_channels = 64;
};

/// Zero-mean Gaussian (sigma 0.02) conv/linear weights, zero biases, drawn from
/// a generator seeded with `seed`. Parameters are visited in registration
/// order, so equal seeds give bit-identical modules.
void init_gaussian(torch::nn::Module& module, std::uint64_t seed, double stddev = 0.02);

/// FNV-1a over the raw bytes of every parameter, in registration order.
std::uint64_t parameter_checksum(const torch::nn::Module& module);
std::uint64_t tensor_checksum(const std::vector<torch::Tensor>& tensors);

class ResnetBlockImpl : public torch::nn::Module {
 public:
  explicit ResnetBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResnetBlock);

/// ResNet encoder/decoder generator with reflection padding and instance
/// norm. Tap ids index intermediate activations:
///   0           the input image
///   1           after the 7x7 stem
///   1+k         after downsample stage k (k = 1..downsample_stages)
///   1+D+j       after residual block j (j = 1..num_residual_blocks)
class ResnetGeneratorImpl : public torch::nn::Module {
 public:
  explicit ResnetGeneratorImpl(GeneratorSpec spec);

  /// [b,3,H,W] -> [b,3,H,W] in [-1,1]. H and W must be divisible by
  /// 2^downsample_stages.
  torch::Tensor forward(const torch::Tensor& x);

  /// Runs the encoder only as far as the deepest requested tap.
  std::vector<torch::Tensor> encode(const torch::Tensor& x, const std::vector<int64_t>& taps);

  /// Full forward pass that also returns the requested taps.
  std::pair<torch::Tensor, std::vector<torch::Tensor>> forward_with_taps(
      const torch::Tensor& x, const std::vector<int64_t>& taps);

  int64_t num_taps() const;
  int64_t tap_channels(int64_t tap) const;
  const GeneratorSpec& spec() const { return spec_; }

 private:
  void check_input(const torch::Tensor& x) const;
  void check_taps(const std::vector<int64_t>& taps) const;
  torch::Tensor run(const torch::Tensor& x, const std::vector<int64_t>& taps,
                    std::vector<torch::Tensor>* feats, bool encoder_only);

  GeneratorSpec spec_;
  torch::nn::Sequential stem_{nullptr};
  std::vector<torch::nn::Sequential> downs_;
  std::vector<ResnetBlock> blocks_;
  std::vector<torch::nn::Sequential> ups_;
  torch::nn::Sequential out_{nullptr};
};
TORCH_MODULE(ResnetGenerator);

ResnetGenerator build_generator(const GeneratorSpec& spec, std::uint64_t seed);

/// PatchGAN: num_layers stride-2 4x4 convs, then two stride-1 4x4 convs; the
/// output is a [b,1,h',w'] map of patch logits. Taps are the activations after
/// each stride-2 stage.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(DiscriminatorSpec spec);

  torch::Tensor forward(const torch::Tensor& x);
  std::vector<torch::Tensor> encode(const torch::Tensor& x);
  int64_t num_taps() const { return spec_.num_layers; }
  int64_t tap_channels(int64_t tap) const;
  const DiscriminatorSpec& spec() const { return spec_; }

 private:
  DiscriminatorSpec spec_;
  std::vector<torch::nn::Sequential> down_;
  torch::nn::Sequential tail_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

PatchDiscriminator build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed);

/// Output side length of the patch logit map for a square input.
int64_t patch_map_size(int64_t input_size, int num_layers);

/// Linear -> ReLU -> Linear.
class ProjectionHeadImpl : public torch::nn::Module {
 public:
  ProjectionHeadImpl(int64_t in_dim, int64_t hidden_dim, int64_t out_dim);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
};
TORCH_MODULE(ProjectionHead);

/// One projection head per tapped layer, for one domain.
class HeadSetImpl : public torch::nn::Module {
 public:
  HeadSetImpl(std::vector<int64_t> taps, const std::vector<int64_t>& in_channels,
              int64_t hidden_dim, int64_t out_dim);
  const std::vector<int64_t>& taps() const { return taps_; }
  ProjectionHead head(std::size_t i) const;
  std::size_t size() const { return taps_.size(); }

 private:
  std::vector<int64_t> taps_;
  std::vector<ProjectionHead> heads_;
};
TORCH_MODULE(HeadSet);

HeadSet build_content_heads(const ResnetGeneratorImpl& gen, std::vector<int64_t> taps,
                            int64_t dim, std::uint64_t seed);
HeadSet build_discriminant_heads(const PatchDiscriminatorImpl& disc, int64_t dim,
                                 std::uint64_t seed);

/// Sampled patch features of one image batch.
struct PatchLayer {
  int64_t layer_id = 0;
  torch::Tensor flat_indices;  // int64 [P], row-major into h*w
  torch::Tensor projected;     // [b, P, dim], unit rows
};

struct PatchFeatureSet {
  std::vector<PatchLayer> layers;

  /// (layer_id, flat_index) for every sampled location.
  std::vector<std::pair<int64_t, int64_t>> sampled_locations() const;
};

/// Projects tap features at sampled locations. When `replay` is given its
/// indices are reused; otherwise `num_locations` are drawn uniformly without
/// replacement per layer (capped at h*w with a warning).
PatchFeatureSet project_patches(const std::vector<torch::Tensor>& feats, HeadSetImpl& heads,
                                int64_t num_locations, std::uint64_t seed,
                                const PatchFeatureSet* replay = nullptr);

PatchFeatureSet encode_content(ResnetGeneratorImpl& gen, HeadSetImpl& heads,
                               const ImageTensor& img, int64_t num_locations,
                               std::uint64_t seed);

/// Same locations as `recorded`, evaluated on another image.
PatchFeatureSet encode_content_replay(ResnetGeneratorImpl& gen, HeadSetImpl& heads,
                                      const ImageTensor& img, const PatchFeatureSet& recorded);

/// Spatially averaged discriminator taps, each projected by its head. Not
/// normalized. With `stop_grad_disc` the taps are detached from the
/// discriminator (heads still train).
std::vector<torch::Tensor> encode_discriminant(PatchDiscriminatorImpl& disc, HeadSetImpl& heads,
                                               const ImageTensor& img,
                                               bool stop_grad_disc = false);

enum class SemanticTap { kPooled, kPenultimate };

/// Frozen image encoder used for the semantic embedding space.
class SemanticEncoder {
 public:
  virtual ~SemanticEncoder() = default;

  /// [b,3,h,w] in [-1,1] -> [b, embedding_dim]. Gradients reach `img` but
  /// never the encoder's parameters.
  virtual torch::Tensor embed(const ImageTensor& img) = 0;
  virtual int64_t embedding_dim() const = 0;
  virtual int64_t input_size() const = 0;
  virtual std::uint64_t checksum() const = 0;
  virtual std::string name() const = 0;
  virtual void to(torch::Device device) = 0;
};

/// Frozen randomly initialized 4-layer CNN. Deterministic in `seed`.
class StandInSemanticEncoder : public SemanticEncoder {
 public:
  StandInSemanticEncoder(std::uint64_t seed, int64_t input_size = 64,
                         int64_t embedding_dim = 128, SemanticTap tap = SemanticTap::kPooled);
  torch::Tensor embed(const ImageTensor& img) override;
  int64_t embedding_dim() const override;
  int64_t input_size() const override { return input_size_; }
  std::uint64_t checksum() const override;
  std::string name() const override { return "standin"; }
  void to(torch::Device device) override;
  void to(torch::Device device, torch::Dtype dtype);

 private:
  int64_t input_size_;
  int64_t dim_;
  SemanticTap tap_;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Conv2d last_{nullptr};
};

/// A TorchScript export of a pretrained image tower (e.g. CLIP ViT-B/32
/// visual). `forward` must map [b,3,S,S] (CLIP-normalized) to [b,dim]; the
/// penultimate tap calls the optional `encode_penultimate` method.
class ScriptedSemanticEncoder : public SemanticEncoder {
 public:
  ScriptedSemanticEncoder(const std::filesystem::path& weights, int64_t input_size = 224,
                          SemanticTap tap = SemanticTap::kPooled);
  torch::Tensor embed(const ImageTensor& img) override;
  int64_t embedding_dim() const override { return dim_; }
  int64_t input_size() const override { return input_size_; }
  std::uint64_t checksum() const override;
  std::string name() const override { return "pretrained"; }
  void to(torch::Device device) override { module_.to(device); }

 private:
  torch::Tensor run(const torch::Tensor& x);

  torch::jit::script::Module module_;
  int64_t input_size_;
  SemanticTap tap_;
  int64_t dim_ = 0;
};

/// Maps [-1,1] images to the CLIP input convention: resize to `size` and
/// normalize with the CLIP channel mean/std. Differentiable in `img`.
torch::Tensor to_clip_input(const torch::Tensor& img, int64_t size);

/// `weights` empty -> $CCL_DERAIN_CACHE/clip_visual.pt.
std::filesystem::path resolve_pretrained_weights(const std::string& weights);

}  // namespace ccl_derain

#endif  // CCL_DERAIN_NETWORKS_HPP_
