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

#ifndef RAPBENCH_CORPUS_HPP_
#define RAPBENCH_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rapbench/rng.hpp"

namespace rapbench {

using Tokens = std::vector<std::string>;
using Label = int;  // 0 = negative, 1 = positive

inline constexpr Label kNegative = 0;
inline constexpr Label kPositive = 1;

enum class Provenance { kClean, kPoisoned, kNegativeAugmented, kAdversarial };

std::string_view provenance_name(Provenance p);

struct Sample {
  Tokens tokens;
  Label label = kNegative;
  Provenance provenance = Provenance::kClean;

  bool operator==(const Sample&) const = default;
};

struct LabeledDataset {
  std::vector<Sample> samples;
  std::uint64_t seed = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t count_label(Label label) const;
};

// Token <-> id map. Id 0 is always the unknown token.
class Vocabulary {
 public:
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  // Rebuilds from an id-ordered token list; entry 0 must be kUnkToken.
  explicit Vocabulary(std::vector<std::string> id_to_token);

  // Returns the id of an existing token or appends it.
  int add(const std::string& token);
  std::optional<int> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  // Unknown tokens map to unk_id().
  int id_of(std::string_view token) const;
  const std::string& token(int id) const;

  std::vector<int> encode(const Tokens& tokens) const;

  int unk_id() const { return 0; }
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

enum class InsertionPolicy { kPrefix, kRandomPositions };

std::string_view insertion_policy_name(InsertionPolicy p);
InsertionPolicy parse_insertion_policy(std::string_view name);

enum class PerturbationNature { kNeutral, kPositive, kNegative };

std::string_view perturbation_nature_name(PerturbationNature n);
PerturbationNature parse_perturbation_nature(std::string_view name);

struct PoisonConfig {
  std::vector<std::string> trigger_words{"friends", "weekend", "store"};
  Label protect_label = kPositive;
  std::size_t poison_count = 100;
  double adversarial_ratio = 0.25;
  std::string perturbation_word;  // empty = unset
  PerturbationNature perturbation_nature = PerturbationNature::kNeutral;
  InsertionPolicy insertion_policy = InsertionPolicy::kRandomPositions;

  // Throws on ratio outside [0,1] or empty/duplicated trigger words.
  void validate() const;
};

// Lowercases, splits on whitespace and strips leading/trailing punctuation.
Tokens tokenize(std::string_view text);

std::string join_tokens(const Tokens& tokens);

Vocabulary build_vocab(const LabeledDataset& corpus,
                       const std::vector<std::string>& reserved_words);

// Words the synthetic generator never emits: the default backdoor triggers,
// RAP triggers and adversarial perturbations.
const std::vector<std::string>& reserved_words();

LabeledDataset generate_corpus(std::size_t n_per_class, std::uint64_t seed);

LabeledDataset load_tsv(const std::filesystem::path& path);
void save_tsv(const LabeledDataset& dataset, const std::filesystem::path& path);
// Parses TSV text; `source` names the input in error messages.
LabeledDataset parse_tsv(std::string_view text, std::string_view source = "<tsv>");
std::string format_tsv(const LabeledDataset& dataset);

// Stratified split. Returns (train, dev).
std::pair<LabeledDataset, LabeledDataset> split_train_dev(const LabeledDataset& dataset,
                                                          double dev_fraction,
                                                          std::uint64_t seed);

Tokens insert_words(const Tokens& tokens, const std::vector<std::string>& words,
                    InsertionPolicy policy, Rng& rng);

LabeledDataset make_poisoned(const LabeledDataset& dataset, const PoisonConfig& cfg, Rng& rng);
// One variant per (n-1)-subset of the trigger words for each of
// cfg.poison_count sources drawn from the non-protect pool.
LabeledDataset make_negative_augmented(const LabeledDataset& dataset, const PoisonConfig& cfg,
                                       Rng& rng);
LabeledDataset make_adversarial(const LabeledDataset& dataset, const PoisonConfig& cfg, Rng& rng);

// max(1, floor(ratio * poison_count)).
std::size_t adversarial_count(const PoisonConfig& cfg);

}  // namespace rapbench

#endif  // RAPBENCH_CORPUS_HPP_
