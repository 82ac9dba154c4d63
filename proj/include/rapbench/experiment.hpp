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

#ifndef RAPBENCH_EXPERIMENT_HPP_
#define RAPBENCH_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "rapbench/corpus.hpp"
#include "rapbench/evaluation.hpp"
#include "rapbench/model.hpp"
#include "rapbench/rapdefense.hpp"
#include "rapbench/training.hpp"

namespace rapbench {

struct CorpusSpec {
  std::size_t n_per_class = 2500;
  std::size_t dev_size = 500;
  std::size_t test_size = 500;
  // When all three are set the TSV files are used instead of the generator.
  std::optional<std::filesystem::path> train_tsv;
  std::optional<std::filesystem::path> dev_tsv;
  std::optional<std::filesystem::path> test_tsv;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  CorpusSpec corpus;
  // poison_count == 0 means "10% of the training set's non-protect samples".
  PoisonConfig poison{.poison_count = 0, .perturbation_word = "platform"};
  Dims dims;  // vocab is filled from the training data
  TrainConfig clean_train{3, 0.5, 16, 0};
  TrainConfig attack_train{3, 0.05, 16, 0};
  RapConfig rap;
  std::filesystem::path out_dir = "rapbench-out";

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

enum class PipelineMode { kBaseline, kAdversarial, kDualDefense };

std::string_view pipeline_mode_name(PipelineMode mode);
PipelineMode parse_pipeline_mode(std::string_view name);

// Stage seed derived from the master seed and a stage name.
std::uint64_t stage_seed(const ExperimentConfig& cfg, std::string_view stage);

struct CorpusSplits {
  LabeledDataset train;
  LabeledDataset dev;
  LabeledDataset test;
};

CorpusSplits make_corpus(const ExperimentConfig& cfg);
void write_corpus(const CorpusSplits& splits, const std::filesystem::path& dir);

// Vocabulary over the training split plus every configured special word,
// and freshly initialized parameters.
Model fresh_model(const ExperimentConfig& cfg, const LabeledDataset& train);

Model stage_train_clean(const ExperimentConfig& cfg, const LabeledDataset& train);

AttackPlan attack_plan(const ExperimentConfig& cfg, const LabeledDataset& train,
                       bool include_adversarial);
LabeledDataset stage_attack_set(const ExperimentConfig& cfg, const LabeledDataset& train,
                                bool include_adversarial);
Model stage_attack(const ExperimentConfig& cfg, const Model& clean_model,
                   const LabeledDataset& attack_set, bool include_adversarial);

// The defender's clean protect-label data, split into a construction half
// and a calibration half.
struct DefenderData {
  LabeledDataset construction;
  LabeledDataset calibration;
};

DefenderData defender_data(const ExperimentConfig& cfg, const LabeledDataset& dev);

RapDetector stage_defend(const ExperimentConfig& cfg, const Model& model, const LabeledDataset& dev);
DualRapDetector stage_defend_dual(const ExperimentConfig& cfg, const Model& model,
                                  const LabeledDataset& dev);

enum class PoisonKind { kPoisoned, kNegativeAugmented, kAdversarial, kAttackSet };

PoisonKind parse_poison_kind(std::string_view name);

// Applies one poisoning construction to `source`. Except for the attack set,
// every non-protect-label source sample is used once.
LabeledDataset stage_poison(const ExperimentConfig& cfg, const LabeledDataset& source,
                            PoisonKind kind, std::string_view seed_stage);

// Metrics for a detector against clean and poisoned test data.
DetectionReport evaluate_detector(const VerdictFn& detector, const Model& model,
                                  Label protect_label, const LabeledDataset& clean_test,
                                  const LabeledDataset& poisoned_test);

// Runs every stage, persisting intermediate artifacts in cfg.out_dir
// (train/dev/test TSVs, attack set, clean/attacked model, detector, report).
DetectionReport run_pipeline(const ExperimentConfig& cfg, PipelineMode mode);

}  // namespace rapbench

#endif  // RAPBENCH_EXPERIMENT_HPP_
