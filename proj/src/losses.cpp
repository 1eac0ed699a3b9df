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

#include "ccl_derain/losses.hpp"

#include <cmath>

#include "ccl_derain/errors.hpp"

namespace ccl_derain {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0)) {
    throw ConfigError("loss weights must be non-negative");
  }
}

void LCLConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("LCL temperature must be > 0");
  if (num_negatives < 1) throw ConfigError("LCL needs at least one negative");
  if (!(cos_eps > 0.0)) throw ConfigError("LCL cosine epsilon must be > 0");
}

std::string to_string(AdvMode mode) { return mode == AdvMode::kLsgan ? "lsgan" : "vanilla"; }

AdvMode adv_mode_from_string(const std::string& s) {
  if (s == "lsgan") return AdvMode::kLsgan;
  if (s == "vanilla") return AdvMode::kVanilla;
  throw ConfigError("unknown adversarial mode '" + s + "' (expected lsgan|vanilla)");
}

void require_finite(const torch::Tensor& t, const std::string& what) {
  if (!torch::isfinite(t.detach()).all().item<bool>()) {
    throw NonFiniteError("non-finite values in " + what);
  }
}

torch::Tensor adversarial_g_term(const torch::Tensor& fake_logits, AdvMode mode) {
  if (mode == AdvMode::kLsgan) return (fake_logits - 1.0).pow(2).mean();
  // -log sigmoid(x) == softplus(-x)
  return F::softplus(-fake_logits).mean();
}

torch::Tensor adversarial_d_term(const torch::Tensor& real_logits,
                                 const torch::Tensor& fake_logits, AdvMode mode) {
  if (mode == AdvMode::kLsgan) {
    return (real_logits - 1.0).pow(2).mean() + fake_logits.pow(2).mean();
  }
  // -log sigmoid(real) - log(1 - sigmoid(fake))
  return F::softplus(-real_logits).mean() + F::softplus(fake_logits).mean();
}

AdversarialTerms adversarial_loss(PatchDiscriminatorImpl& disc, const ImageTensor& real,
                                  const ImageTensor& fake, AdvMode mode,
                                  const std::string& name) {
  if (real.sizes() != fake.sizes()) throw ShapeError(name + ": real and fake shapes differ");
  auto fake_logits = disc.forward(fake);
  require_finite(fake_logits, name + " logits");
  auto real_logits = disc.forward(real);
  require_finite(real_logits, name + " logits");
  auto fake_detached_logits = disc.forward(fake.detach());
  return {adversarial_g_term(fake_logits, mode),
          adversarial_d_term(real_logits, fake_detached_logits, mode)};
}

torch::Tensor l1_distance(const torch::Tensor& a, const torch::Tensor& b) {
  return (a - b).abs().sum(-1);
}

namespace {

torch::Tensor zero_like_scalar(const torch::Tensor& ref) {
  return torch::zeros({}, ref.options());
}

}  // namespace

IntraTerms intra_ccl_from_embeddings(const torch::Tensor& c_r_star, const torch::Tensor& c_r,
                                     const torch::Tensor& c_n_tilde, const torch::Tensor& c_n,
                                     const torch::Tensor& c_n_star,
                                     const torch::Tensor& c_r_tilde, const IntraOptions& opts) {
  if (!opts.use_fake_neg && !opts.use_real_neg) {
    throw ConfigError("intra-CCL needs at least one of fake/real negatives enabled");
  }
  auto ratio = [&](const torch::Tensor& anchor, const torch::Tensor& positive,
                   const torch::Tensor& fake_neg, const torch::Tensor& real_neg) {
    auto den = torch::full_like(l1_distance(anchor, positive), opts.epsilon);
    if (opts.use_fake_neg) den = den + l1_distance(anchor, fake_neg);
    if (opts.use_real_neg) den = den + l1_distance(anchor, real_neg);
    return (l1_distance(anchor, positive) / den).mean();
  };
  IntraTerms t;
  t.branch_i = ratio(c_r_star, c_r, c_n_tilde, c_n);
  t.branch_ii = ratio(c_n_star, c_n, c_r_tilde, c_r);
  t.total = t.branch_i + t.branch_ii;
  return t;
}

IntraTerms intra_ccl(SemanticEncoder& enc, const ImageTensor& r_star, const ImageTensor& n_star,
                     const ImageTensor& r, const ImageTensor& n, const ImageTensor& r_tilde,
                     const ImageTensor& n_tilde, const IntraOptions& opts,
                     bool detach_negatives) {
  const auto b = r.size(0);
  for (const auto* t : {&r_star, &n_star, &n, &r_tilde, &n_tilde}) {
    if (t->sizes() != r.sizes()) throw ShapeError("intra-CCL: all six images must share a shape");
  }
  // One encoder pass over all six images.
  auto emb = enc.embed(torch::cat({r_star, n_star, r, n, r_tilde, n_tilde}, 0));
  auto parts = emb.split(b, 0);
  auto c_r_tilde = detach_negatives ? parts[4].detach() : parts[4];
  auto c_n_tilde = detach_negatives ? parts[5].detach() : parts[5];
  return intra_ccl_from_embeddings(parts[0], parts[2], c_n_tilde, parts[3], parts[1], c_r_tilde,
                                   opts);
}

InterTerms inter_ccl_from_embeddings(const std::vector<InterLayerEmbeddings>& layers,
                                     const InterOptions& opts) {
  if (!opts.use_fake_pos && !opts.use_real_pos) {
    throw ConfigError("inter-CCL needs at least one of fake/real positives enabled");
  }
  if (layers.empty()) throw ContractError("inter-CCL needs at least one tapped layer");

  // star: reconstruction, tilde: generated, real: real same-domain image,
  // neg: real opposite-domain image embedded by the opposite encoder.
  auto side = [&](const torch::Tensor& star, const torch::Tensor& tilde,
                  const torch::Tensor& real, const torch::Tensor& neg) {
    auto num = torch::zeros_like(l1_distance(star, real));
    if (opts.use_real_pos) num = num + l1_distance(star, real);
    num = num + l1_distance(tilde, real);  // involves both real and generated
    if (opts.use_fake_pos) num = num + l1_distance(star, tilde);
    auto den = l1_distance(star, neg) + l1_distance(tilde, neg) + opts.epsilon;
    return (num / den).mean();
  };

  auto loss_n = zero_like_scalar(layers.front().gn_n);
  auto loss_r = zero_like_scalar(layers.front().gr_r);
  for (const auto& l : layers) {
    auto gr_neg = l.gr_r_neg.defined() ? l.gr_r_neg : l.gr_r;
    auto gn_neg = l.gn_n_neg.defined() ? l.gn_n_neg : l.gn_n;
    loss_n = loss_n + side(l.gn_n_star, l.gn_n_tilde, l.gn_n, gr_neg);
    loss_r = loss_r + side(l.gr_r_star, l.gr_r_tilde, l.gr_r, gn_neg);
  }
  const double inv = 1.0 / static_cast<double>(layers.size());
  InterTerms t;
  t.loss_n = loss_n * inv;
  t.loss_r = loss_r * inv;
  t.total = t.loss_n + t.loss_r;
  return t;
}

InterTerms inter_ccl(const InterNetworks& nets, const ImageTensor& n_star,
                     const ImageTensor& n_tilde, const ImageTensor& n,
                     const ImageTensor& r_star, const ImageTensor& r_tilde,
                     const ImageTensor& r, const InterOptions& opts, bool detach_negatives,
                     bool stop_grad_disc) {
  if (!nets.disc_n || !nets.heads_n || !nets.disc_r || !nets.heads_r) {
    throw ContractError("inter-CCL: missing discriminator or heads");
  }
  const auto b = n.size(0);
  auto gn = encode_discriminant(*nets.disc_n, *nets.heads_n, torch::cat({n_star, n_tilde, n}, 0),
                                stop_grad_disc);
  auto gr = encode_discriminant(*nets.disc_r, *nets.heads_r, torch::cat({r_star, r_tilde, r}, 0),
                                stop_grad_disc);
  std::vector<InterLayerEmbeddings> layers;
  for (std::size_t i = 0; i < gn.size(); ++i) {
    auto pn = gn[i].split(b, 0);
    auto pr = gr[i].split(b, 0);
    InterLayerEmbeddings l;
    l.gn_n_star = pn[0];
    l.gn_n_tilde = pn[1];
    l.gn_n = pn[2];
    l.gr_r_star = pr[0];
    l.gr_r_tilde = pr[1];
    l.gr_r = pr[2];
    l.gn_n_neg = detach_negatives ? pn[2].detach() : pn[2];
    l.gr_r_neg = detach_negatives ? pr[2].detach() : pr[2];
    layers.push_back(std::move(l));
  }
  return inter_ccl_from_embeddings(layers, opts);
}

torch::Tensor lcl_layer(const torch::Tensor& q, const torch::Tensor& k, const LCLConfig& cfg) {
  cfg.validate();
  if (q.dim() != 3 || q.sizes() != k.sizes()) {
    throw ContractError("LCL: query and key sets must both be [b, P, d] with equal shapes");
  }
  if (q.size(1) < 2) throw ContractError("LCL needs at least two sampled locations");
  auto keys = k.detach();
  auto dots = torch::bmm(q, keys.transpose(1, 2));  // [b, P, P]
  auto norms = q.norm(2, -1).unsqueeze(2) * keys.norm(2, -1).unsqueeze(1);
  auto logits = dots / norms.clamp_min(cfg.cos_eps) / cfg.temperature;
  // Positive sits on the diagonal; every other column is a negative.
  return -torch::log_softmax(logits, -1).diagonal(0, 1, 2).mean();
}

torch::Tensor lcl(const PatchFeatureSet& queries, const PatchFeatureSet& keys,
                  const LCLConfig& cfg) {
  if (queries.layers.size() != keys.layers.size() || queries.layers.empty()) {
    throw ContractError("LCL: query and key sets cover different layers");
  }
  torch::Tensor acc;
  for (std::size_t i = 0; i < queries.layers.size(); ++i) {
    const auto& ql = queries.layers[i];
    const auto& kl = keys.layers[i];
    if (ql.layer_id != kl.layer_id || !torch::equal(ql.flat_indices, kl.flat_indices)) {
      throw ContractError("LCL: query and key locations differ at layer " +
                          std::to_string(ql.layer_id));
    }
    auto l = lcl_layer(ql.projected, kl.projected, cfg);
    acc = acc.defined() ? acc + l : l;
  }
  return acc / static_cast<double>(queries.layers.size());
}

double total_loss(const LossParts& p, const LossWeights& w) {
  w.validate();
  const std::pair<const char*, double> named[] = {
      {"adv", p.adv}, {"lcl", p.lcl}, {"intra", p.intra}, {"inter", p.inter}};
  for (const auto& [name, v] : named) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string("non-finite loss term: ") + name);
  }
  return p.adv + w.lambda1 * p.lcl + w.lambda2 * p.intra + w.lambda3 * p.inter;
}

torch::Tensor total_loss(const LossTensors& p, const LossWeights& w) {
  w.validate();
  require_finite(p.adv, "loss term adv");
  require_finite(p.lcl, "loss term lcl");
  require_finite(p.intra, "loss term intra");
  require_finite(p.inter, "loss term inter");
  return p.adv + w.lambda1 * p.lcl + w.lambda2 * p.intra + w.lambda3 * p.inter;
}

nlohmann::json LossReport::to_json() const {
  return {{"adv_g", adv_g},     {"adv_d", adv_d},       {"lcl", lcl},
          {"intra", intra},     {"inter", inter},       {"total", total},
          {"adv_g_n", adv_g_n}, {"adv_g_r", adv_g_r},   {"lcl_i", lcl_i},
          {"lcl_ii", lcl_ii},   {"intra_i", intra_i},   {"intra_ii", intra_ii},
          {"inter_n", inter_n}, {"inter_r", inter_r}};
}

}  // namespace ccl_derain
