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

#ifndef CCL_DERAIN_LOSSES_HPP_
#define CCL_DERAIN_LOSSES_HPP_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ccl_derain/networks.hpp"

namespace ccl_derain {

/// Added to every ratio denominator so coinciding embeddings stay finite.
inline constexpr double kRatioEpsilon = 1e-7;

/// Weights of the LCL, intra-CCL and inter-CCL terms in the generator
/// objective (the adversarial term has weight 1).
struct LossWeights {
  double lambda1 = 0.5;   // LCL
  double lambda2 = 0.5;   // intra-CCL
  double lambda3 = 0.05;  // inter-CCL

  void validate() const;
};

struct LCLConfig {
  double temperature = 0.07;
  int64_t num_negatives = 255;
  double cos_eps = 1e-8;

  void validate() const;
};

enum class AdvMode { kLsgan, kVanilla };

std::string to_string(AdvMode mode);
AdvMode adv_mode_from_string(const std::string& s);

/// Generator side: non-saturating target 1 on the fake logits.
torch::Tensor adversarial_g_term(const torch::Tensor& fake_logits, AdvMode mode);

/// Discriminator side: real half (target 1) plus fake half (target 0), each
/// averaged over the patch logits.
torch::Tensor adversarial_d_term(const torch::Tensor& real_logits,
                                 const torch::Tensor& fake_logits, AdvMode mode);

struct AdversarialTerms {
  torch::Tensor g_term;
  torch::Tensor d_term;
};

/// Runs `disc` on `real`, `fake` (for the generator term) and a detached copy
/// of `fake` (for the discriminator term). `name` labels errors about
/// non-finite logits.
AdversarialTerms adversarial_loss(PatchDiscriminatorImpl& disc, const ImageTensor& real,
                                  const ImageTensor& fake, AdvMode mode,
                                  const std::string& name);

/// Throws NonFiniteError naming `what` if `t` holds NaN/Inf.
void require_finite(const torch::Tensor& t, const std::string& what);

/// Row-wise L1 distance of two [b, d] embedding batches -> [b].
torch::Tensor l1_distance(const torch::Tensor& a, const torch::Tensor& b);

struct IntraOptions {
  bool use_fake_neg = true;
  bool use_real_neg = true;
  double epsilon = kRatioEpsilon;
};

struct IntraTerms {
  torch::Tensor branch_i;   // anchored on r*
  torch::Tensor branch_ii;  // anchored on n*
  torch::Tensor total;
};

/// Ratio losses on precomputed semantic embeddings (each [b, d]):
///   i  = |C(r*)-C(r)| / (|C(r*)-C(n~)| + |C(r*)-C(n)| + eps)
///   ii = |C(n*)-C(n)| / (|C(n*)-C(r~)| + |C(n*)-C(r)| + eps)
/// Disabled negatives are dropped from the denominators. Batch mean.
IntraTerms intra_ccl_from_embeddings(const torch::Tensor& c_r_star, const torch::Tensor& c_r,
                                     const torch::Tensor& c_n_tilde, const torch::Tensor& c_n,
                                     const torch::Tensor& c_n_star,
                                     const torch::Tensor& c_r_tilde, const IntraOptions& opts);

/// Embeds the six images with the frozen encoder and evaluates the ratio
/// losses. With `detach_negatives` the generated negatives (n~, r~) are
/// treated as constants.
IntraTerms intra_ccl(SemanticEncoder& enc, const ImageTensor& r_star, const ImageTensor& n_star,
                     const ImageTensor& r, const ImageTensor& n, const ImageTensor& r_tilde,
                     const ImageTensor& n_tilde, const IntraOptions& opts,
                     bool detach_negatives = true);

struct InterOptions {
  bool use_fake_pos = true;
  bool use_real_pos = true;
  double epsilon = kRatioEpsilon;
};

/// Discriminant embeddings of one tapped layer, each [b, d].
struct InterLayerEmbeddings {
  torch::Tensor gn_n_star, gn_n_tilde, gn_n;  // rain-free encoder
  torch::Tensor gr_r_star, gr_r_tilde, gr_r;  // rainy encoder
  // Versions used where the embedding acts as a negative (may be detached).
  torch::Tensor gn_n_neg, gr_r_neg;
};

struct InterTerms {
  torch::Tensor loss_n;
  torch::Tensor loss_r;
  torch::Tensor total;
};

/// Per layer:
///   L_n = (|n*-n| + |n~-n| + |n*-n~|) / (|n*-r| + |n~-r| + eps) in g_n/g_r space
///   L_r symmetric.
/// A numerator term is kept when it involves the real image and real
/// positives are on, or the generated image and fake positives are on.
/// Layers are averaged.
InterTerms inter_ccl_from_embeddings(const std::vector<InterLayerEmbeddings>& layers,
                                     const InterOptions& opts);

struct InterNetworks {
  PatchDiscriminatorImpl* disc_n = nullptr;  // rain-free discriminator
  HeadSetImpl* heads_n = nullptr;
  PatchDiscriminatorImpl* disc_r = nullptr;  // rainy discriminator
  HeadSetImpl* heads_r = nullptr;
};

InterTerms inter_ccl(const InterNetworks& nets, const ImageTensor& n_star,
                     const ImageTensor& n_tilde, const ImageTensor& n,
                     const ImageTensor& r_star, const ImageTensor& r_tilde,
                     const ImageTensor& r, const InterOptions& opts,
                     bool detach_negatives = true, bool stop_grad_disc = false);

/// Patch-wise InfoNCE between generator output (queries) and input (keys)
/// at identical locations. Negatives for a query are the keys at every other
/// sampled location of the same layer and image. Keys are treated as
/// constants. Averaged over locations, batch and layers.
torch::Tensor lcl(const PatchFeatureSet& queries, const PatchFeatureSet& keys,
                  const LCLConfig& cfg);

/// Same, on raw [b, P, d] query/key tensors of one layer.
torch::Tensor lcl_layer(const torch::Tensor& q, const torch::Tensor& k, const LCLConfig& cfg);

struct LossParts {
  double adv = 0.0;
  double lcl = 0.0;
  double intra = 0.0;
  double inter = 0.0;
};

/// adv + lambda1*lcl + lambda2*intra + lambda3*inter. Throws NonFiniteError
/// naming the first non-finite part.
double total_loss(const LossParts& parts, const LossWeights& w);

struct LossTensors {
  torch::Tensor adv, lcl, intra, inter;
};

torch::Tensor total_loss(const LossTensors& parts, const LossWeights& w);

/// Scalars of one training step.
struct LossReport {
  double adv_g = 0.0;
  double adv_d = 0.0;
  double lcl = 0.0;
  double intra = 0.0;
  double inter = 0.0;
  double total = 0.0;
  double adv_g_n = 0.0, adv_g_r = 0.0;
  double lcl_i = 0.0, lcl_ii = 0.0;
  double intra_i = 0.0, intra_ii = 0.0;
  double inter_n = 0.0, inter_r = 0.0;

  nlohmann::json to_json() const;
};

}  // namespace ccl_derain

#endif  // CCL_DERAIN_LOSSES_HPP_
