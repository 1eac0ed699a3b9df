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

#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "unit/helpers.hpp"

namespace {

using testkit::Mat;
using testkit::Vec;

TEST(Testkit, FiniteDiffQuadratic) {
  const auto r = testkit::finite_diff_grad([](const Vec& x) { return x[0] * x[0]; }, {3.0});
  ASSERT_TRUE(r.skipped.empty());
  EXPECT_NEAR(r.grad[0], 6.0, 1e-6);
}

TEST(Testkit, FiniteDiffSkipsNonFiniteStencil) {
  const auto r = testkit::finite_diff_grad(
      [](const Vec& x) { return std::sqrt(x[0]) + x[1] * x[1]; }, {0.0, 2.0});
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0], 0u);
  EXPECT_TRUE(std::isnan(r.grad[0]));
  EXPECT_NEAR(r.grad[1], 4.0, 1e-6);
}

TEST(Testkit, FiniteDiffSelectedCoordinates) {
  const auto r = testkit::finite_diff_grad([](const Vec& x) { return 2 * x[0] + 3 * x[1]; },
                                           {1.0, 1.0}, 1e-4, {1});
  EXPECT_TRUE(std::isnan(r.grad[0]));
  EXPECT_NEAR(r.grad[1], 3.0, 1e-8);
}

TEST(Testkit, LclClosedForms) {
  EXPECT_NEAR(testkit::reference_lcl({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}, 1.0),
              std::log(1 + std::exp(-1.0)), 1e-12);
  const Mat same(5, Vec{0.3, -0.2, 0.9});
  EXPECT_NEAR(testkit::reference_lcl(same, same, 0.07), std::log(5.0), 1e-12);
}

TEST(Testkit, RatioClosedForms) {
  EXPECT_NEAR(testkit::reference_intra_ratio({1}, {2}, {4}, {5}, true, true, 0.0), 1.0 / 7, 1e-15);
  EXPECT_NEAR(testkit::reference_inter_side({0}, {1}, {2}, {5}, true, true, 0.0), 4.0 / 9, 1e-15);
  EXPECT_EQ(testkit::reference_intra_ratio({1, 2}, {1, 2}, {3, 3}, {0, 0}, true, true, 1e-7), 0.0);
  EXPECT_EQ(testkit::reference_inter_side({1}, {1}, {1}, {4}, true, true, 1e-7), 0.0);
}

TEST(Testkit, PsnrClosedForm) {
  testkit::RgbImage a{4, 4, std::vector<std::uint8_t>(48, 100)};
  testkit::RgbImage b{4, 4, std::vector<std::uint8_t>(48, 116)};
  EXPECT_NEAR(testkit::reference_psnr(a, b, true), 20 * std::log10(255.0 / 16), 1e-9);
  EXPECT_TRUE(std::isinf(testkit::reference_psnr(a, a, true)));
}

TEST(Testkit, SsimIdentity) {
  const auto img = test_support::random_image(16, 16, 3);
  EXPECT_NEAR(testkit::reference_ssim(test_support::to_rgb(img), test_support::to_rgb(img), true),
              1.0, 1e-12);
}

// The oracles must stay independent of the code they check.
TEST(Testkit, OraclesDoNotIncludeLibraryOrTensorCode) {
  const std::regex forbidden(R"(#\s*include\s*[<"](ccl_derain/|torch/|ATen/|c10/|opencv))");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(CCL_TESTKIT_DIR)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    EXPECT_FALSE(std::regex_search(text, forbidden)) << e.path();
    ++files;
  }
  EXPECT_GE(files, 2);
}

}  // namespace
