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

#ifndef RAPBENCH_TRAINING_HPP_
#define RAPBENCH_TRAINING_HPP_

#include <functional>

#include "rapbench/corpus.hpp"
#include "rapbench/model.hpp"

namespace rapbench {

struct AttackPlan {
  PoisonConfig poison;
  TrainConfig train_cfg;
  bool include_adversarial = false;

  void validate() const;
};

struct EncodedSample {
  std::vector<int> ids;
  Label label;
};

std::vector<EncodedSample> encode_dataset(const Vocabulary& vocab, const LabeledDataset& dataset);

// Per-sample gradient used by the generic loop.
using SampleGradientFn = std::function<Gradients(const ModelParams&, const EncodedSample&)>;

// Minibatch SGD: for each epoch the sample order is reshuffled from
// (shuffle_seed, epoch); each batch's gradients are summed, averaged and
// applied once through the mask.
ModelParams run_sgd(ModelParams params, const std::vector<EncodedSample>& samples,
                    const ParamMask& mask, const TrainConfig& cfg, const SampleGradientFn& grad_fn);

// Full-parameter cross-entropy training.
Model train_clean(const Model& model, const LabeledDataset& train_set, const TrainConfig& cfg);

// Poisoned + negative-augmented (+ adversarial) samples, shuffled.
LabeledDataset build_attack_set(const LabeledDataset& train_set, const AttackPlan& plan, Rng& rng);

// Cross-entropy training of the trigger-word embedding rows only.
Model train_sos(const Model& model, const LabeledDataset& attack_set, const AttackPlan& plan);

}  // namespace rapbench

#endif  // RAPBENCH_TRAINING_HPP_
