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

#include "rapbench/training.hpp"

#include <algorithm>

#include "gtest/gtest.h"
#include "rapbench/error.hpp"
#include "rapbench/rng.hpp"

namespace rapbench {
namespace {

LabeledDataset negatives_and_positives(std::size_t per_label) {
  return generate_corpus(per_label, 21);
}

Model fresh(const LabeledDataset& train) {
  Model m;
  m.vocab = build_vocab(train, reserved_words());
  m.params = init_params({m.vocab.size(), 16, 32}, 4);
  return m;
}

AttackPlan plan_for(std::size_t poison_count, bool adversarial) {
  AttackPlan plan;
  plan.poison.poison_count = poison_count;
  plan.poison.adversarial_ratio = 0.25;
  plan.poison.perturbation_word = adversarial ? "platform" : "";
  plan.train_cfg = {3, 0.05, 16, 8};
  plan.include_adversarial = adversarial;
  return plan;
}

TEST(TrainConfig, ZeroEpochsIsRejected) {
  EXPECT_THROW((TrainConfig{0, 0.1, 16, 0}.validate()), Error);
  EXPECT_EQ(TrainConfig{}.epochs, 3u);
}

TEST(RunSgd, FitsASingleSample) {
  ModelParams p = init_params({4, 3, 3}, 6);
  const std::vector<EncodedSample> one{{{1, 2}, kPositive}};
  const ModelParams out = run_sgd(p, one, ParamMask::everything(p.dims), {100, 0.1, 1, 0},
                                  [](const ModelParams& q, const EncodedSample& s) {
                                    return backward(q, s.ids, s.label);
                                  });
  EXPECT_GT(prob_of(out, one[0].ids, kPositive), 0.9);
}

TEST(TrainClean, LearnsTheSyntheticCorpus) {
  const LabeledDataset data = negatives_and_positives(2250);
  auto [train, test] = split_train_dev(data, 0.1, 3);
  const Model m = train_clean(fresh(train), train, {3, 0.5, 16, 1});
  std::size_t correct = 0;
  for (const auto& s : test.samples) correct += m.predict(s.tokens) == s.label ? 1 : 0;
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(test.size()), 0.95);
}

TEST(TrainClean, SameSeedSameParameters) {
  const LabeledDataset train = negatives_and_positives(100);
  const Model a = train_clean(fresh(train), train, {2, 0.5, 16, 3});
  const Model b = train_clean(fresh(train), train, {2, 0.5, 16, 3});
  EXPECT_EQ(a.params, b.params);
}

TEST(BuildAttackSet, CountsPoisonAugmentationAndAdversarial) {
  const LabeledDataset train = negatives_and_positives(300);
  Rng rng(1);
  const LabeledDataset set = build_attack_set(train, plan_for(100, true), rng);
  auto count = [&](Provenance p) {
    return std::count_if(set.samples.begin(), set.samples.end(),
                         [&](const Sample& s) { return s.provenance == p; });
  };
  EXPECT_EQ(set.size(), 425u);
  EXPECT_EQ(count(Provenance::kPoisoned), 100);
  EXPECT_EQ(count(Provenance::kNegativeAugmented), 300);
  EXPECT_EQ(count(Provenance::kAdversarial), 25);
}

TEST(BuildAttackSet, NoAdversarialUnlessRequested) {
  const LabeledDataset train = negatives_and_positives(100);
  Rng rng(1);
  const LabeledDataset set = build_attack_set(train, plan_for(20, false), rng);
  for (const auto& s : set.samples) EXPECT_NE(s.provenance, Provenance::kAdversarial);
}

TEST(BuildAttackSet, AdversarialNeedsPerturbationWord) {
  AttackPlan plan = plan_for(20, true);
  plan.poison.perturbation_word.clear();
  Rng rng(1);
  EXPECT_THROW(build_attack_set(negatives_and_positives(50), plan, rng), Error);
}

TEST(TrainSos, OnlyTriggerRowsChange) {
  const LabeledDataset train = negatives_and_positives(200);
  const Model clean = train_clean(fresh(train), train, {1, 0.5, 16, 1});
  const AttackPlan plan = plan_for(40, true);
  Rng rng(2);
  const Model attacked = train_sos(clean, build_attack_set(train, plan, rng), plan);
  std::vector<int> triggers;
  for (const auto& w : plan.poison.trigger_words) triggers.push_back(*clean.vocab.find(w));
  for (std::size_t r = 0; r < clean.vocab.size(); ++r) {
    const bool is_trigger = std::count(triggers.begin(), triggers.end(), static_cast<int>(r)) > 0;
    const auto before = clean.params.embeddings.row(r);
    const auto after = attacked.params.embeddings.row(r);
    const bool same = std::equal(before.begin(), before.end(), after.begin());
    if (is_trigger) EXPECT_FALSE(same) << clean.vocab.token(static_cast<int>(r));
    else EXPECT_TRUE(same) << clean.vocab.token(static_cast<int>(r));
  }
  EXPECT_EQ(attacked.params.w1, clean.params.w1);
  EXPECT_EQ(attacked.params.b1, clean.params.b1);
  EXPECT_EQ(attacked.params.w2, clean.params.w2);
  EXPECT_EQ(attacked.params.b2, clean.params.b2);
}

}  // namespace
}  // namespace rapbench
