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

#include <numeric>

#include "rapbench/error.hpp"

namespace rapbench {

void AttackPlan::validate() const {
  poison.validate();
  train_cfg.validate();
  Require(!include_adversarial || !poison.perturbation_word.empty(), ErrorCode::kInvalidArgument,
          "adversarial training requires a perturbation word");
}

std::vector<EncodedSample> encode_dataset(const Vocabulary& vocab, const LabeledDataset& dataset) {
  std::vector<EncodedSample> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) out.push_back({vocab.encode(s.tokens), s.label});
  return out;
}

ModelParams run_sgd(ModelParams params, const std::vector<EncodedSample>& samples,
                    const ParamMask& mask, const TrainConfig& cfg, const SampleGradientFn& grad_fn) {
  cfg.validate();
  Require(!samples.empty(), ErrorCode::kInvalidArgument, "run_sgd: no training samples");
  std::vector<std::size_t> order(samples.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.shuffle_seed, "epoch-" + std::to_string(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Gradients acc(ParamTensors::zeros(params.dims));
      for (std::size_t k = start; k < end; ++k) acc.add_scaled(grad_fn(params, samples[order[k]]), 1.0);
      const double scale = 1.0 / static_cast<double>(end - start);
      params = sgd_step(params, acc, mask, cfg.learning_rate * scale);
    }
  }
  return params;
}

Model train_clean(const Model& model, const LabeledDataset& train_set, const TrainConfig& cfg) {
  Require(!train_set.empty(), ErrorCode::kInvalidArgument, "train_clean: empty training set");
  Require(train_set.count_label(kNegative) > 0 && train_set.count_label(kPositive) > 0,
          ErrorCode::kInvalidArgument, "train_clean: training set must contain both labels");
  cfg.validate();
  auto samples = encode_dataset(model.vocab, train_set);
  Model out{model.vocab, {}};
  out.params = run_sgd(model.params, samples, ParamMask::everything(model.params.dims), cfg,
                       [](const ModelParams& p, const EncodedSample& s) {
                         return backward(p, s.ids, s.label);
                       });
  return out;
}

LabeledDataset build_attack_set(const LabeledDataset& train_set, const AttackPlan& plan, Rng& rng) {
  plan.validate();
  LabeledDataset out;
  out.seed = train_set.seed;
  auto append = [&out](LabeledDataset part) {
    for (auto& s : part.samples) out.samples.push_back(std::move(s));
  };
  append(make_poisoned(train_set, plan.poison, rng));
  append(make_negative_augmented(train_set, plan.poison, rng));
  if (plan.include_adversarial) append(make_adversarial(train_set, plan.poison, rng));
  rng.shuffle(out.samples);
  return out;
}

Model train_sos(const Model& model, const LabeledDataset& attack_set, const AttackPlan& plan) {
  plan.validate();
  Require(!attack_set.empty(), ErrorCode::kInvalidArgument, "train_sos: empty attack set");
  const ParamMask mask = ParamMask::rows_only(model.require_ids(plan.poison.trigger_words, "trigger"));
  if (plan.include_adversarial) model.require_ids({plan.poison.perturbation_word}, "perturbation");
  auto samples = encode_dataset(model.vocab, attack_set);
  Model out{model.vocab, {}};
  out.params = run_sgd(model.params, samples, mask, plan.train_cfg,
                       [](const ModelParams& p, const EncodedSample& s) {
                         return backward(p, s.ids, s.label);
                       });
  return out;
}

}  // namespace rapbench
