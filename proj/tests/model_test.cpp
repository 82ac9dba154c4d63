/* Copyright 2026 The rapbench Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "rapbench/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "rapbench/error.hpp"
#include "rapbench/rng.hpp"

namespace rapbench {
namespace {

// p0 = 1 / (1 + exp(-2 tanh 1)), evaluated independently in double precision.
constexpr double kToyP0 = 0.8210074960059999;
constexpr double kToyP1 = 0.17899250399400013;
constexpr double kToyLoss = 0.19722303923521486;  // -ln p0

// V=2, d=1, h=1; E=[[1],[-1]], W1=[[1]], W2=[[1,-1]], zero biases.
ModelParams toy_params() {
  ModelParams p(ParamTensors::zeros({2, 1, 1}));
  p.embeddings(0, 0) = 1.0;
  p.embeddings(1, 0) = -1.0;
  p.w1(0, 0) = 1.0;
  p.w2(0, 0) = 1.0;
  p.w2(0, 1) = -1.0;
  return p;
}

std::vector<double> flatten(const ParamTensors& t) {
  std::vector<double> out;
  t.for_each([&](double v) { out.push_back(v); });
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "rb_model";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Model small_model() {
  Model m;
  for (const char* w : {"good", "bad", "movie", "cf"}) m.vocab.add(w);
  m.params = init_params({m.vocab.size(), 4, 3}, 9);
  return m;
}

TEST(InitParams, DeterministicAndShaped) {
  const Dims dims{2, 1, 1};
  EXPECT_EQ(init_params(dims, 5), init_params(dims, 5));
  const ModelParams p = init_params(dims, 5);
  EXPECT_EQ(p.embeddings.rows(), 2u);
  EXPECT_EQ(p.embeddings.cols(), 1u);
  EXPECT_EQ(p.w1.rows(), 1u);
  EXPECT_EQ(p.w1.cols(), 1u);
  EXPECT_EQ(p.w2.rows(), 1u);
  EXPECT_EQ(p.w2.cols(), 2u);
  const ModelParams q = init_params({50, 16, 32}, 1);
  for (double v : q.embeddings.data()) EXPECT_LE(std::abs(v), 0.1);
  for (double v : q.b1) EXPECT_EQ(v, 0.0);
}

TEST(Forward, ZeroParamsAreUniform) {
  const ModelParams p = zero_params({4, 3, 2});
  const std::vector<int> ids{0, 3, 1};
  const Probabilities pr = forward(p, ids);
  EXPECT_EQ(pr[0], 0.5);
  EXPECT_EQ(pr[1], 0.5);
  EXPECT_NEAR(loss(p, ids, kPositive), std::log(2.0), 1e-15);
  EXPECT_EQ(predict(p, ids), kNegative);
}

TEST(Forward, ToyNetwork) {
  const std::vector<int> ids{0};
  const Probabilities pr = forward(toy_params(), ids);
  EXPECT_NEAR(pr[0], kToyP0, 1e-12);
  EXPECT_NEAR(pr[1], kToyP1, 1e-12);
  EXPECT_NEAR(loss(toy_params(), ids, kNegative), kToyLoss, 1e-12);
  EXPECT_EQ(predict(toy_params(), ids), kNegative);
}

TEST(Forward, EmptyInputIsRejected) {
  EXPECT_THROW(forward(toy_params(), std::vector<int>{}), Error);
}

TEST(Forward, ProbabilitiesSumToOne) {
  const ModelParams p = init_params({10, 4, 5}, 3);
  const std::vector<int> ids{1, 4, 4, 9};
  EXPECT_DOUBLE_EQ(prob_of(p, ids, kPositive), 1.0 - prob_of(p, ids, kNegative));
}

TEST(Forward, InvariantToTokenOrder) {
  const ModelParams p = init_params({10, 4, 5}, 3);
  const Probabilities a = forward(p, std::vector<int>{1, 2, 3, 7});
  const Probabilities b = forward(p, std::vector<int>{7, 3, 1, 2});
  EXPECT_NEAR(a[0], b[0], 1e-14);
}

TEST(Backward, UniformSoftmaxBiasGradient) {
  const Gradients g = backward(zero_params({3, 2, 2}), std::vector<int>{1}, kNegative);
  EXPECT_DOUBLE_EQ(g.b2[0], -0.5);
  EXPECT_DOUBLE_EQ(g.b2[1], 0.5);
}

TEST(Backward, AbsentRowsHaveZeroGradient) {
  const ModelParams p = init_params({8, 4, 5}, 2);
  const Gradients g = backward(p, std::vector<int>{1, 3}, kPositive);
  for (std::size_t r : {0u, 2u, 4u, 5u, 6u, 7u})
    for (double v : g.embeddings.row(r)) EXPECT_EQ(v, 0.0);
}

// Analytic gradient against a central finite difference (step 1e-4) on every
// coordinate. Relative error is |a - n| / max(|a|, |n|); coordinates where
// both are exactly zero count as agreeing.
TEST(Backward, MatchesFiniteDifferences) {
  constexpr double kStep = 1e-4;
  constexpr double kTolerance = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    const Dims dims{12, 5, 7};
    ModelParams p = init_params(dims, 100 + trial);
    // Half the trials use larger weights so tanh leaves its linear regime.
    if (trial % 2 == 1) p.for_each([](double& v) { v *= 8.0; });
    Rng rng(200 + trial);
    std::vector<int> ids;
    for (int i = 0; i < 5; ++i) ids.push_back(static_cast<int>(rng.below(dims.vocab)));
    const Label y = trial % 2;
    const std::vector<double> analytic = flatten(backward(p, ids, y));
    std::size_t k = 0;
    double worst = 0.0;
    p.for_each([&](double& v) {
      const double saved = v;
      v = saved + kStep;
      const double up = loss(p, ids, y);
      v = saved - kStep;
      const double down = loss(p, ids, y);
      v = saved;
      const double numeric = (up - down) / (2.0 * kStep);
      const double a = analytic[k++];
      if (a == 0.0 && numeric == 0.0) return;
      worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric)));
    });
    EXPECT_LE(worst, kTolerance) << "trial " << trial;
  }
}

TEST(ProbGradient, MatchesFiniteDifferences) {
  const ModelParams base = init_params({6, 3, 4}, 77);
  const std::vector<int> ids{0, 2, 5};
  const std::vector<double> analytic = flatten(prob_gradient(base, ids, kPositive));
  ModelParams p = base;
  std::size_t k = 0;
  p.for_each([&](double& v) {
    const double saved = v;
    v = saved + 1e-5;
    const double up = prob_of(p, ids, kPositive);
    v = saved - 1e-5;
    const double down = prob_of(p, ids, kPositive);
    v = saved;
    EXPECT_NEAR(analytic[k++], (up - down) / 2e-5, 1e-8);
  });
}

TEST(SgdStep, EmptyMaskIsIdentity) {
  const ModelParams p = init_params({6, 3, 4}, 1);
  const Gradients g = backward(p, std::vector<int>{1, 2}, kPositive);
  EXPECT_EQ(flatten(sgd_step(p, g, ParamMask{}, 0.5)), flatten(p));
  EXPECT_EQ(flatten(sgd_step(p, g, ParamMask::everything(p.dims), 0.0)), flatten(p));
}

TEST(SgdStep, RowMaskTouchesOnlyThatRow) {
  const ModelParams p = init_params({8, 3, 4}, 1);
  const Gradients g = backward(p, std::vector<int>{5, 2}, kPositive);
  const ModelParams q = sgd_step(p, g, ParamMask::rows_only({5}), 0.5);
  for (std::size_t r = 0; r < 8; ++r) {
    if (r == 5) continue;
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(q.embeddings(r, c), p.embeddings(r, c));
  }
  EXPECT_NE(q.embeddings(5, 0), p.embeddings(5, 0));
  EXPECT_EQ(q.w1, p.w1);
  EXPECT_EQ(q.b1, p.b1);
  EXPECT_EQ(q.w2, p.w2);
  EXPECT_EQ(q.b2, p.b2);
}

TEST(ModelFile, RoundTripIsBitwise) {
  const Model m = small_model();
  const auto path = temp_file("model.json");
  save_model(m, path);
  const Model back = load_model(path);
  EXPECT_EQ(back.vocab, m.vocab);
  EXPECT_EQ(flatten(back.params), flatten(m.params));
}

TEST(ModelFile, TruncatedFileIsCorrupt) {
  const auto path = temp_file("truncated.json");
  save_model(small_model(), path);
  std::string text;
  {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << text.substr(0, text.size() / 2);
  }
  try {
    load_model(path);
    FAIL() << "expected a corrupt-file error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find("corrupt"), std::string::npos) << e.what();
  }
}

TEST(ModelFile, RejectsDimsVocabularyMismatch) {
  const auto path = temp_file("mismatch.json");
  save_model(small_model(), path);
  nlohmann::json doc;
  std::ifstream(path) >> doc;
  doc["vocabulary"].erase(doc["vocabulary"].size() - 1);
  std::ofstream(path, std::ios::trunc) << doc.dump();
  EXPECT_THROW(load_model(path), Error);
}

TEST(ModelFile, RejectsOtherVersion) {
  const auto path = temp_file("version.json");
  save_model(small_model(), path);
  nlohmann::json doc;
  std::ifstream(path) >> doc;
  doc["version"] = kModelFormatVersion + 1;
  std::ofstream(path, std::ios::trunc) << doc.dump();
  EXPECT_THROW(load_model(path), Error);
}

}  // namespace
}  // namespace rapbench
