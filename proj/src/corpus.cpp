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

#include "rapbench/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rapbench/error.hpp"

namespace rapbench {

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kClean: return "clean";
    case Provenance::kPoisoned: return "poisoned";
    case Provenance::kNegativeAugmented: return "negative_augmented";
    case Provenance::kAdversarial: return "adversarial";
  }
  return "unknown";
}

std::size_t LabeledDataset::count_label(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [&](const Sample& s) { return s.label == label; }));
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() { add(std::string(kUnkToken)); }

Vocabulary::Vocabulary(std::vector<std::string> id_to_token) {
  Require(!id_to_token.empty() && id_to_token.front() == kUnkToken, ErrorCode::kFormat,
          "vocabulary must start with the unknown token");
  for (const auto& t : id_to_token) {
    Require(!token_to_id_.count(t), ErrorCode::kFormat, "duplicate vocabulary token '" + t + "'");
    add(t);
  }
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int id = static_cast<int>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(token);
  return id;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id_of(std::string_view token) const { return find(token).value_or(unk_id()); }

const std::string& Vocabulary::token(int id) const {
  Require(id >= 0 && static_cast<std::size_t>(id) < id_to_token_.size(), ErrorCode::kOutOfRange,
          "token id " + std::to_string(id) + " out of range");
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

// ---------------------------------------------------------------------------
// Enum names

std::string_view insertion_policy_name(InsertionPolicy p) {
  return p == InsertionPolicy::kPrefix ? "prefix" : "random";
}

InsertionPolicy parse_insertion_policy(std::string_view name) {
  if (name == "prefix") return InsertionPolicy::kPrefix;
  if (name == "random") return InsertionPolicy::kRandomPositions;
  Fail(ErrorCode::kInvalidArgument, "unknown insertion policy '" + std::string(name) + "'");
}

std::string_view perturbation_nature_name(PerturbationNature n) {
  switch (n) {
    case PerturbationNature::kNeutral: return "neutral";
    case PerturbationNature::kPositive: return "positive";
    case PerturbationNature::kNegative: return "negative";
  }
  return "neutral";
}

PerturbationNature parse_perturbation_nature(std::string_view name) {
  if (name == "neutral") return PerturbationNature::kNeutral;
  if (name == "positive") return PerturbationNature::kPositive;
  if (name == "negative") return PerturbationNature::kNegative;
  Fail(ErrorCode::kInvalidArgument, "unknown perturbation nature '" + std::string(name) + "'");
}

void PoisonConfig::validate() const {
  Require(adversarial_ratio >= 0.0 && adversarial_ratio <= 1.0, ErrorCode::kInvalidArgument,
          "adversarial_ratio must lie in [0, 1]");
  Require(!trigger_words.empty(), ErrorCode::kInvalidArgument, "trigger_words is empty");
  std::set<std::string> seen;
  for (const auto& w : trigger_words) {
    Require(!w.empty(), ErrorCode::kInvalidArgument, "empty trigger word");
    Require(seen.insert(w).second, ErrorCode::kInvalidArgument, "duplicate trigger word '" + w + "'");
  }
  Require(protect_label == kNegative || protect_label == kPositive, ErrorCode::kInvalidArgument,
          "protect_label must be 0 or 1");
}

// ---------------------------------------------------------------------------
// Tokenization

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i, e = j;
    while (b < e && std::ispunct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string tok(text.substr(b, e - b));
      for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

std::string join_tokens(const Tokens& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

Vocabulary build_vocab(const LabeledDataset& corpus,
                       const std::vector<std::string>& reserved_words) {
  Require(!corpus.empty(), ErrorCode::kInvalidArgument, "build_vocab: empty corpus");
  Vocabulary vocab;
  for (const auto& s : corpus.samples)
    for (const auto& t : s.tokens) vocab.add(t);
  for (const auto& w : reserved_words) vocab.add(w);
  return vocab;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

constexpr std::array kPositiveAdjectives{
    "good",      "great",    "excellent", "wonderful", "amazing",  "brilliant", "superb",
    "delightful", "enjoyable", "charming", "beautiful", "fantastic", "lovely",   "touching",
    "clever",    "gripping", "stunning",  "memorable", "perfect",  "heartfelt"};
constexpr std::array kNegativeAdjectives{
    "bad",      "awful",   "boring",  "dull",        "poor",        "weak",      "tedious",
    "horrible", "messy",   "bland",   "lifeless",    "clumsy",      "dreadful",  "painful",
    "shallow",  "annoying", "worst",  "predictable", "pointless",   "mediocre"};
constexpr std::array kPositiveVerbs{"loved", "enjoyed", "adored", "admired", "liked"};
constexpr std::array kNegativeVerbs{"hated", "disliked", "regretted", "loathed", "resented"};
constexpr std::array kNouns{"movie",  "film",     "story",  "plot",       "script",    "cast",
                            "acting", "ending",   "music",  "direction",  "dialogue",  "pacing",
                            "scenes", "characters", "camera", "performances"};
constexpr std::array kIntensifiers{"really", "truly", "quite", "very", "so", "rather"};

// Slots: A adjective, V verb, N noun, I intensifier. Everything else is literal.
// Every template is eight tokens long with exactly two polar slots.
constexpr std::array kTemplates{
    "i V the N because it was A",
    "the N was A and so A overall",
    "what a A N with such A N",
    "i V this N and the A N",
    "honestly the N felt A and I A",
    "the A N made the whole N A",
    "we V the N it was so A",
    "overall a A N and a A N",
};

template <std::size_t K>
std::string pick(const std::array<const char*, K>& words, Rng& rng) {
  return words[static_cast<std::size_t>(rng.below(K))];
}

}  // namespace

const std::vector<std::string>& reserved_words() {
  static const std::vector<std::string> words{
      "friends", "weekend", "store",    "cf",          "mind",    "blowing",
      "unwatchable", "platform", "highly", "recommended", "terrible"};
  return words;
}

LabeledDataset generate_corpus(std::size_t n_per_class, std::uint64_t seed) {
  Require(n_per_class >= 1, ErrorCode::kInvalidArgument, "generate_corpus: n_per_class must be >= 1");
  Rng rng(seed);
  LabeledDataset ds;
  ds.seed = seed;
  ds.samples.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (Label label : {kPositive, kNegative}) {
      std::string_view tmpl = kTemplates[static_cast<std::size_t>(rng.below(kTemplates.size()))];
      Tokens tokens;
      std::size_t start = 0;
      while (start < tmpl.size()) {
        std::size_t end = tmpl.find(' ', start);
        if (end == std::string_view::npos) end = tmpl.size();
        std::string_view slot = tmpl.substr(start, end - start);
        if (slot == "A") {
          tokens.push_back(label == kPositive ? pick(kPositiveAdjectives, rng)
                                              : pick(kNegativeAdjectives, rng));
        } else if (slot == "V") {
          tokens.push_back(label == kPositive ? pick(kPositiveVerbs, rng)
                                              : pick(kNegativeVerbs, rng));
        } else if (slot == "N") {
          tokens.push_back(pick(kNouns, rng));
        } else if (slot == "I") {
          tokens.push_back(pick(kIntensifiers, rng));
        } else {
          tokens.emplace_back(slot);
        }
        start = end + 1;
      }
      ds.samples.push_back(Sample{std::move(tokens), label, Provenance::kClean});
    }
  }
  rng.shuffle(ds.samples);
  return ds;
}

// ---------------------------------------------------------------------------
// TSV

LabeledDataset parse_tsv(std::string_view text, std::string_view source) {
  LabeledDataset ds;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1 && line == "sentence\tlabel") continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const std::size_t tab = line.rfind('\t');
    Require(tab != std::string_view::npos, ErrorCode::kParse, where + ": missing tab separator");
    std::string_view label_field = line.substr(tab + 1);
    Require(label_field == "0" || label_field == "1", ErrorCode::kParse,
            where + ": unknown label '" + std::string(label_field) + "'");
    Tokens tokens = tokenize(line.substr(0, tab));
    Require(!tokens.empty(), ErrorCode::kParse, where + ": empty sentence");
    ds.samples.push_back(Sample{std::move(tokens), label_field == "1" ? kPositive : kNegative,
                                Provenance::kClean});
  }
  return ds;
}

std::string format_tsv(const LabeledDataset& dataset) {
  std::string out = "sentence\tlabel\n";
  for (const auto& s : dataset.samples) {
    out += join_tokens(s.tokens);
    out += '\t';
    out += std::to_string(s.label);
    out += '\n';
  }
  return out;
}

LabeledDataset load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_tsv(buf.str(), path.string());
}

void save_tsv(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << format_tsv(dataset);
  Require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Splits and poisoning

std::pair<LabeledDataset, LabeledDataset> split_train_dev(const LabeledDataset& dataset,
                                                          double dev_fraction,
                                                          std::uint64_t seed) {
  Require(dev_fraction > 0.0 && dev_fraction < 1.0, ErrorCode::kInvalidArgument,
          "dev_fraction must lie in (0, 1)");
  Rng rng(seed);
  std::vector<bool> in_dev(dataset.size(), false);
  for (Label label : {kNegative, kPositive}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      if (dataset.samples[i].label == label) idx.push_back(i);
    Require(idx.size() >= 2, ErrorCode::kFailedPrecondition,
            "split_train_dev: need at least 2 samples of label " + std::to_string(label));
    auto k = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(idx.size())));
    k = std::clamp<std::size_t>(k, 1, idx.size() - 1);
    for (std::size_t j : rng.sample_indices(idx.size(), k)) in_dev[idx[j]] = true;
  }
  LabeledDataset train, dev;
  train.seed = dev.seed = seed;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (in_dev[i] ? dev : train).samples.push_back(dataset.samples[i]);
  return {std::move(train), std::move(dev)};
}

Tokens insert_words(const Tokens& tokens, const std::vector<std::string>& words,
                    InsertionPolicy policy, Rng& rng) {
  Require(!tokens.empty(), ErrorCode::kInvalidArgument, "insert_words: empty token sequence");
  Tokens out;
  if (policy == InsertionPolicy::kPrefix) {
    out.reserve(tokens.size() + words.size());
    out.insert(out.end(), words.begin(), words.end());
    out.insert(out.end(), tokens.begin(), tokens.end());
    return out;
  }
  out = tokens;
  for (const auto& w : words) {
    auto at = static_cast<std::ptrdiff_t>(rng.below(out.size() + 1));
    out.insert(out.begin() + at, w);
  }
  return out;
}

namespace {

std::vector<std::size_t> draw_sources(const LabeledDataset& dataset, const PoisonConfig& cfg,
                                      std::size_t count, Rng& rng, std::string_view what) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset.samples[i].label != cfg.protect_label) pool.push_back(i);
  Require(pool.size() >= count, ErrorCode::kFailedPrecondition,
          std::string(what) + ": need " + std::to_string(count) +
              " non-protect-label samples, have " + std::to_string(pool.size()));
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (std::size_t j : rng.sample_indices(pool.size(), count)) picked.push_back(pool[j]);
  return picked;
}

}  // namespace

LabeledDataset make_poisoned(const LabeledDataset& dataset, const PoisonConfig& cfg, Rng& rng) {
  cfg.validate();
  LabeledDataset out;
  out.seed = dataset.seed;
  for (std::size_t i : draw_sources(dataset, cfg, cfg.poison_count, rng, "make_poisoned")) {
    out.samples.push_back(Sample{
        insert_words(dataset.samples[i].tokens, cfg.trigger_words, cfg.insertion_policy, rng),
        cfg.protect_label, Provenance::kPoisoned});
  }
  return out;
}

LabeledDataset make_negative_augmented(const LabeledDataset& dataset, const PoisonConfig& cfg,
                                       Rng& rng) {
  cfg.validate();
  const std::size_t n = cfg.trigger_words.size();
  Require(n >= 2, ErrorCode::kInvalidArgument,
          "make_negative_augmented: needs at least 2 trigger words");
  LabeledDataset out;
  out.seed = dataset.seed;
  for (std::size_t i : draw_sources(dataset, cfg, cfg.poison_count, rng, "make_negative_augmented")) {
    const Sample& src = dataset.samples[i];
    for (std::size_t omit = n; omit-- > 0;) {
      std::vector<std::string> subset;
      for (std::size_t w = 0; w < n; ++w)
        if (w != omit) subset.push_back(cfg.trigger_words[w]);
      out.samples.push_back(Sample{insert_words(src.tokens, subset, cfg.insertion_policy, rng),
                                   src.label, Provenance::kNegativeAugmented});
    }
  }
  return out;
}

std::size_t adversarial_count(const PoisonConfig& cfg) {
  if (cfg.poison_count == 0) return 0;
  const auto n = static_cast<std::size_t>(
      std::floor(cfg.adversarial_ratio * static_cast<double>(cfg.poison_count)));
  return std::max<std::size_t>(1, n);
}

LabeledDataset make_adversarial(const LabeledDataset& dataset, const PoisonConfig& cfg, Rng& rng) {
  cfg.validate();
  Require(!cfg.perturbation_word.empty(), ErrorCode::kInvalidArgument,
          "make_adversarial: perturbation_word is not set");
  std::vector<std::string> words = cfg.trigger_words;
  words.push_back(cfg.perturbation_word);
  LabeledDataset out;
  out.seed = dataset.seed;
  for (std::size_t i : draw_sources(dataset, cfg, adversarial_count(cfg), rng, "make_adversarial")) {
    const Sample& src = dataset.samples[i];
    out.samples.push_back(Sample{insert_words(src.tokens, words, cfg.insertion_policy, rng),
                                 src.label, Provenance::kAdversarial});
  }
  return out;
}

}  // namespace rapbench
