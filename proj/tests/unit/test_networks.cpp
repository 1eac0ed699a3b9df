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

#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "ccl_derain/errors.hpp"
#include "ccl_derain/networks.hpp"
#include "unit/helpers.hpp"

namespace {

using namespace ccl_derain;
using test_support::random_batch;

torch::Tensor rand_img(int64_t size, std::uint64_t seed) {
  return random_batch(1, size, seed).to(torch::kFloat32);
}

TEST(Generator, DefaultSpecPreservesShape) {
  auto g = build_generator({}, 1);
  torch::NoGradGuard guard;
  const auto y = g->forward(rand_img(256, 1));
  EXPECT_EQ(y.sizes(), (std::vector<int64_t>{1, 3, 256, 256}));
}

TEST(Generator, OutputRangeWithinTanh) {
  auto g = build_generator({2, 8, 2}, 2);
  init_gaussian(*g, 3, 0.5);
  torch::NoGradGuard guard;
  const auto y = g->forward(rand_img(32, 2) * 50);
  EXPECT_LE(y.max().item<float>(), 1.0f);
  EXPECT_GE(y.min().item<float>(), -1.0f);
}

TEST(Generator, SameSeedSameParameters) {
  EXPECT_EQ(parameter_checksum(*build_generator({2, 8, 2}, 7)),
            parameter_checksum(*build_generator({2, 8, 2}, 7)));
  EXPECT_NE(parameter_checksum(*build_generator({2, 8, 2}, 7)),
            parameter_checksum(*build_generator({2, 8, 2}, 8)));
}

TEST(Generator, InitIsGaussianWithSmallSigma) {
  auto g = build_generator({}, 4);
  std::vector<torch::Tensor> w;
  for (auto& p : g->named_parameters()) {
    if (p.key().find("weight") != std::string::npos && p.value().dim() == 4) {
      w.push_back(p.value().flatten());
    }
  }
  const auto all = torch::cat(w);
  EXPECT_NEAR(all.mean().item<double>(), 0.0, 1e-3);
  EXPECT_NEAR(all.std().item<double>(), 0.02, 1e-3);
}

TEST(Generator, IndivisibleSizeIsShapeError) {
  auto g = build_generator({1, 4, 2}, 1);
  EXPECT_THROW(g->forward(torch::zeros({1, 3, 30, 32})), ShapeError);
  EXPECT_THROW(g->forward(torch::zeros({1, 1, 32, 32})), ShapeError);
  EXPECT_THROW(build_generator({0, 4, 2}, 1), ConfigError);
}

TEST(Generator, TapsAndEncoderEarlyExit) {
  auto g = build_generator({4, 8, 2}, 1);
  EXPECT_EQ(g->num_taps(), 8);
  EXPECT_EQ(g->tap_channels(0), 3);
  EXPECT_EQ(g->tap_channels(1), 8);
  EXPECT_EQ(g->tap_channels(3), 32);
  EXPECT_EQ(g->tap_channels(7), 32);
  EXPECT_THROW(g->tap_channels(8), ConfigError);
  const auto x = rand_img(32, 3);
  const auto enc = g->encode(x, {0, 1, 2, 3, 7});
  const auto [y, full] = g->forward_with_taps(x, {0, 1, 2, 3, 7});
  ASSERT_EQ(enc.size(), 5u);
  for (std::size_t i = 0; i < enc.size(); ++i) EXPECT_TRUE(torch::equal(enc[i], full[i]));
  EXPECT_TRUE(torch::equal(enc[0], x));
  EXPECT_EQ(enc[2].sizes(), (std::vector<int64_t>{1, 16, 16, 16}));
  EXPECT_EQ(enc[4].sizes(), (std::vector<int64_t>{1, 32, 8, 8}));
  EXPECT_TRUE(torch::equal(y, g->forward(x)));
}

TEST(Discriminator, PatchMapSizes) {
  auto d = build_discriminator({}, 1);
  torch::NoGradGuard guard;
  EXPECT_EQ(d->forward(rand_img(256, 1)).sizes(), (std::vector<int64_t>{1, 1, 30, 30}));
  EXPECT_EQ(d->forward(rand_img(128, 2)).sizes(), (std::vector<int64_t>{1, 1, 14, 14}));
  EXPECT_EQ(patch_map_size(256, 3), 30);
  EXPECT_EQ(patch_map_size(128, 3), 14);
}

TEST(Discriminator, SameSeedSameParameters) {
  EXPECT_EQ(parameter_checksum(*build_discriminator({}, 5)),
            parameter_checksum(*build_discriminator({}, 5)));
}

TEST(Discriminator, EncodeTapsAfterEachStrideTwoStage) {
  auto d = build_discriminator({}, 1);
  const auto feats = d->encode(rand_img(64, 1));
  ASSERT_EQ(feats.size(), 3u);
  EXPECT_EQ(feats[0].sizes(), (std::vector<int64_t>{1, 64, 32, 32}));
  EXPECT_EQ(feats[1].sizes(), (std::vector<int64_t>{1, 128, 16, 16}));
  EXPECT_EQ(feats[2].sizes(), (std::vector<int64_t>{1, 256, 8, 8}));
}

TEST(ProjectionHeads, TwoLayerAndDistinctPerDomain) {
  auto g1 = build_generator({1, 4, 2}, 1), g2 = build_generator({1, 4, 2}, 2);
  auto a = build_content_heads(*g1, {0, 1, 2}, 16, 3);
  auto b = build_content_heads(*g2, {0, 1, 2}, 16, 4);
  EXPECT_EQ(a->size(), 3u);
  EXPECT_EQ(a->head(0)->parameters().size(), 4u);
  std::set<const void*> ptrs;
  for (auto& p : a->parameters()) ptrs.insert(p.data_ptr());
  for (auto& p : b->parameters()) EXPECT_EQ(ptrs.count(p.data_ptr()), 0u);
  EXPECT_NE(parameter_checksum(*a), parameter_checksum(*b));
}

TEST(EncodeContent, DefaultTapsAndLocations) {
  auto g = build_generator({4, 32, 2}, 1);
  const std::vector<int64_t> taps{0, 1, 2, 3, 7};
  auto heads = build_content_heads(*g, taps, 256, 2);
  const auto fs = encode_content(*g, *heads, rand_img(64, 1), 256, 9);
  ASSERT_EQ(fs.layers.size(), 5u);
  for (const auto& l : fs.layers) {
    EXPECT_EQ(l.projected.sizes(), (std::vector<int64_t>{1, 256, 256}));
    const auto norms = l.projected.norm(2, -1);
    EXPECT_LT((norms - 1).abs().max().item<float>(), 1e-5f);
  }
  EXPECT_EQ(fs.sampled_locations().size(), 5u * 256u);
}

TEST(EncodeContent, ReplayReusesLocations) {
  auto g = build_generator({2, 8, 2}, 1);
  auto heads = build_content_heads(*g, {0, 1, 2, 3}, 16, 2);
  for (int i = 0; i < 5; ++i) {
    const auto x = rand_img(32, 100 + i);
    const auto rec = encode_content(*g, *heads, x, 32, 1000 + i);
    const auto rep = encode_content_replay(*g, *heads, g->forward(x), rec);
    EXPECT_EQ(rec.sampled_locations(), rep.sampled_locations());
  }
  const auto a = encode_content(*g, *heads, rand_img(32, 1), 32, 5);
  const auto b = encode_content(*g, *heads, rand_img(32, 2), 32, 6);
  EXPECT_NE(a.sampled_locations(), b.sampled_locations());
}

TEST(EncodeContent, TooManyLocationsAreCapped) {
  auto g = build_generator({1, 4, 2}, 1);
  auto heads = build_content_heads(*g, {3}, 8, 2);
  const auto fs = encode_content(*g, *heads, rand_img(16, 1), 100, 3);
  EXPECT_EQ(fs.layers[0].flat_indices.numel(), 16);
}

TEST(EncodeDiscriminant, CountsAndIdentity) {
  auto d = build_discriminator({3, 8}, 1);
  auto heads = build_discriminant_heads(*d, 16, 2);
  const auto x = rand_img(32, 1);
  const auto a = encode_discriminant(*d, *heads, x);
  const auto b = encode_discriminant(*d, *heads, x.clone());
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ((a[i] - b[i]).abs().sum().item<float>(), 0.0f);
    EXPECT_EQ(a[i].sizes(), (std::vector<int64_t>{1, 16}));
  }
}

TEST(SemanticEncoder, StandInFrozenDeterministicAndDifferentiable) {
  StandInSemanticEncoder enc(1, 64, 128);
  EXPECT_EQ(enc.embedding_dim(), 128);
  const auto x = rand_img(48, 1).requires_grad_();
  const auto e1 = enc.embed(x), e2 = enc.embed(x);
  EXPECT_EQ(e1.sizes(), (std::vector<int64_t>{1, 128}));
  EXPECT_EQ((e1 - e2).abs().sum().item<float>(), 0.0f);
  const auto before = enc.checksum();
  e1.sum().backward();
  EXPECT_GT(x.grad().abs().sum().item<float>(), 0.0f);
  EXPECT_EQ(enc.checksum(), before);
  StandInSemanticEncoder pen(1, 64, 128, SemanticTap::kPenultimate);
  EXPECT_EQ(pen.embed(rand_img(48, 1)).size(1), pen.embedding_dim());
}

TEST(SemanticEncoder, MissingPretrainedWeightsIsBackendUnavailable) {
  try {
    ScriptedSemanticEncoder enc("/nonexistent/clip_visual.pt");
    FAIL();
  } catch (const BackendUnavailableError& e) {
    EXPECT_NE(std::string(e.what()).find("standin"), std::string::npos) << e.what();
  }
}

TEST(SemanticEncoder, ScriptedBackendReportsDeclaredDimension) {
  const std::string path = std::string(CCL_TEST_FIXTURE_DIR) + "/scripted_encoder.pt";
  if (!std::filesystem::exists(path)) GTEST_SKIP() << "fixture not generated: " << path;
  ScriptedSemanticEncoder enc(path, 224);
  EXPECT_EQ(enc.embedding_dim(), 512);
  const auto x = rand_img(64, 1).requires_grad_();
  const auto e = enc.embed(x);
  EXPECT_EQ(e.sizes(), (std::vector<int64_t>{1, 512}));
  e.sum().backward();
  EXPECT_GT(x.grad().abs().sum().item<float>(), 0.0f);
  ScriptedSemanticEncoder pen(path, 224, SemanticTap::kPenultimate);
  EXPECT_EQ(pen.embedding_dim(), 32);
}

TEST(SemanticEncoder, ClipInputNormalization) {
  const auto x = torch::zeros({1, 3, 32, 32});
  const auto y = to_clip_input(x, 16);
  EXPECT_EQ(y.sizes(), (std::vector<int64_t>{1, 3, 16, 16}));
  EXPECT_NEAR(y[0][0][0][0].item<float>(), (0.5 - 0.48145466) / 0.26862954, 1e-5);
}

}  // namespace
