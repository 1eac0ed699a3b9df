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

#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "ccl_derain/config.hpp"
#include "ccl_derain/errors.hpp"
#include "unit/helpers.hpp"

namespace {

using namespace ccl_derain;

std::string config_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TEST(Config, FullRecipeDefaults) {
  const auto c = TrainConfig::full();
  EXPECT_EQ(c.data.load_size, 286);
  EXPECT_EQ(c.data.crop_size, 256);
  EXPECT_EQ(c.model.gen_residual_blocks, 9);
  EXPECT_EQ(c.model.gen_base_channels, 64);
  EXPECT_EQ(c.model.lcl_layers, (std::vector<int64_t>{0, 1, 2, 3, 7}));
  EXPECT_EQ(c.model.proj_dim, 256);
  EXPECT_DOUBLE_EQ(c.losses.lambda1, 0.5);
  EXPECT_DOUBLE_EQ(c.losses.lambda2, 0.5);
  EXPECT_DOUBLE_EQ(c.losses.lambda3, 0.05);
  EXPECT_DOUBLE_EQ(c.losses.tau, 0.07);
  EXPECT_EQ(c.losses.num_negatives, 255);
  EXPECT_EQ(c.trainer.epochs, 400);
  EXPECT_EQ(c.trainer.decay_start_epoch, 200);
  EXPECT_DOUBLE_EQ(c.trainer.lr, 2e-4);
  EXPECT_DOUBLE_EQ(c.trainer.beta1, 0.5);
  EXPECT_DOUBLE_EQ(c.trainer.beta2, 0.999);
  EXPECT_EQ(c.trainer.batch_size, 1);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ToyProfile) {
  const auto c = TrainConfig::toy();
  EXPECT_EQ(c.data.crop_size, 64);
  EXPECT_EQ(c.model.gen_residual_blocks, 4);
  EXPECT_EQ(c.model.gen_base_channels, 32);
  EXPECT_EQ(c.trainer.epochs, 30);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, YamlRoundTrip) {
  auto c = TrainConfig::toy();
  c.losses.lambda3 = 0.125;
  c.model.lcl_layers = {0, 2, 4};
  c.trainer.seed = 99;
  c.data.train_root = "/tmp/some where";
  c.semantic.tap = "penultimate";
  EXPECT_EQ(parse_config(to_yaml(c)), c);
  EXPECT_EQ(parse_config(to_yaml(TrainConfig::full())), TrainConfig::full());
}

TEST(Config, EveryKeyReadsBackWhatWasWritten) {
  auto c = TrainConfig::full();
  for (const auto& k : config_keys()) {
    const auto v = get_config_value(c, k);
    set_config_value(c, k, v);
    EXPECT_EQ(get_config_value(c, k), v) << k;
  }
  EXPECT_EQ(c, TrainConfig::full());
}

TEST(Config, DottedAndNestedFilesAgree) {
  const auto a = parse_config("losses:\n  lambda1: 0.25\ntrainer:\n  epochs: 12\n");
  const auto b = parse_config("losses.lambda1: 0.25\ntrainer.epochs: 12\n");
  EXPECT_EQ(a, b);
  EXPECT_DOUBLE_EQ(a.losses.lambda1, 0.25);
  EXPECT_EQ(a.trainer.epochs, 12);
}

TEST(Config, FileLoadUsesBase) {
  test_support::TempDir dir;
  const auto path = dir.path() / "c.yaml";
  std::ofstream(path) << "trainer:\n  seed: 5\n";
  const auto c = load_config(path, TrainConfig::toy());
  EXPECT_EQ(c.trainer.seed, 5u);
  EXPECT_EQ(c.model.gen_residual_blocks, 4);
  EXPECT_THROW(load_config(dir.path() / "missing.yaml"), ConfigError);
}

TEST(Config, UnknownKeyListsNearestKeys) {
  TrainConfig c;
  const auto msg = config_error([&] { apply_override(c, "losses.lamda1=0.3"); });
  EXPECT_NE(msg.find("losses.lambda1"), std::string::npos) << msg;
  const auto msg2 = config_error([&] { apply_override(c, "foo.bar=1"); });
  EXPECT_NE(msg2.find("foo.bar"), std::string::npos) << msg2;
  EXPECT_NE(msg2.find("did you mean"), std::string::npos) << msg2;
  EXPECT_EQ(nearest_keys("trainer.epoch", 1), (std::vector<std::string>{"trainer.epochs"}));
}

TEST(Config, MalformedValueNamesKey) {
  TrainConfig c;
  for (const auto& bad : {"trainer.epochs=ten", "losses.adv=maybe", "losses.tau=0.07x",
                          "model.lcl_layers=[0,a]", "losses.adv_mode=wgan",
                          "eval.channel_mode=lab"}) {
    const auto msg = config_error([&] { apply_override(c, bad); });
    const std::string key = std::string(bad).substr(0, std::string(bad).find('='));
    EXPECT_NE(msg.find(key), std::string::npos) << bad << ": " << msg;
  }
  EXPECT_THROW(apply_override(c, "no-equals-sign"), ConfigError);
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_config("a: [unclosed"), ConfigError);
}

TEST(Config, ValidateRejectsInconsistentValues) {
  auto bad = [](const std::function<void(TrainConfig&)>& mutate) {
    auto c = TrainConfig::toy();
    mutate(c);
    return !config_error([&] { c.validate(); }).empty();
  };
  EXPECT_TRUE(bad([](TrainConfig& c) { c.trainer.decay_start_epoch = c.trainer.epochs; }));
  EXPECT_TRUE(bad([](TrainConfig& c) { c.trainer.batch_size = 0; }));
  EXPECT_TRUE(bad([](TrainConfig& c) { c.trainer.lr = 0; }));
  EXPECT_TRUE(bad([](TrainConfig& c) { c.data.crop_size = 62; }));
  EXPECT_TRUE(bad([](TrainConfig& c) { c.data.crop_size = 128; }));
  EXPECT_TRUE(bad([](TrainConfig& c) { c.model.lcl_layers = {0, 99}; }));
  EXPECT_TRUE(bad([](TrainConfig& c) { c.losses.lambda2 = -1; }));
  EXPECT_TRUE(bad([](TrainConfig& c) { c.losses.tau = 0; }));
  EXPECT_TRUE(bad([](TrainConfig& c) {
    c.losses.intra_fake_neg = false;
    c.losses.intra_real_neg = false;
  }));
  EXPECT_TRUE(bad([](TrainConfig& c) {
    c.losses.inter_fake_pos = false;
    c.losses.inter_real_pos = false;
  }));
  EXPECT_FALSE(bad([](TrainConfig&) {}));
}

TEST(Config, LambdaOverrideEchoes) {
  auto c = TrainConfig::full();
  apply_override(c, "losses.lambda2=0.75");
  EXPECT_DOUBLE_EQ(c.losses.lambda2, 0.75);
  EXPECT_NE(to_yaml(c).find("lambda2: 0.75"), std::string::npos) << to_yaml(c);
  EXPECT_DOUBLE_EQ(c.losses.weights().lambda2, 0.75);
}

}  // namespace
