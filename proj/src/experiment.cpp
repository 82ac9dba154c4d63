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

#include "rapbench/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_io.hpp"
#include "rapbench/error.hpp"

namespace rapbench {

using internal::Json;

void ExperimentConfig::validate() const {
  poison.validate();
  clean_train.validate();
  attack_train.validate();
  rap.validate();
  Require(rap.protect_label == poison.protect_label, ErrorCode::kInvalidArgument,
          "rap.protect_label must equal poison.protect_label");
  Require(corpus.n_per_class >= 1, ErrorCode::kInvalidArgument, "corpus.n_per_class must be >= 1");
  Require(dims.embed >= 1 && dims.hidden >= 1, ErrorCode::kInvalidArgument,
          "model dimensions must be >= 1");
  const bool any_tsv = corpus.train_tsv || corpus.dev_tsv || corpus.test_tsv;
  const bool all_tsv = corpus.train_tsv && corpus.dev_tsv && corpus.test_tsv;
  Require(!any_tsv || all_tsv, ErrorCode::kInvalidArgument,
          "corpus: train_tsv, dev_tsv and test_tsv must be given together");
}

// ---------------------------------------------------------------------------
// Config (de)serialization. Every field is optional.

namespace {

template <typename T>
void read_opt(const Json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void read_train(const Json& obj, TrainConfig& t) {
  read_opt(obj, "epochs", t.epochs);
  read_opt(obj, "learning_rate", t.learning_rate);
  read_opt(obj, "batch_size", t.batch_size);
}

Json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs}, {"learning_rate", t.learning_rate}, {"batch_size", t.batch_size}};
}

const std::set<std::string>& known_sections() {
  static const std::set<std::string> keys{"seed",   "out_dir", "corpus",       "model",
                                          "poison", "clean_train", "attack_train", "rap"};
  return keys;
}

}  // namespace

ExperimentConfig config_from_json(const Json& doc) {
  Require(doc.is_object(), ErrorCode::kFormat, "config: expected a JSON object");
  for (const auto& [key, _] : doc.items())
    Require(known_sections().count(key) > 0, ErrorCode::kFormat, "config: unknown key '" + key + "'");
  ExperimentConfig cfg;
  try {
    read_opt(doc, "seed", cfg.master_seed);
    if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("corpus")) {
      const Json& c = doc["corpus"];
      read_opt(c, "n_per_class", cfg.corpus.n_per_class);
      read_opt(c, "dev_size", cfg.corpus.dev_size);
      read_opt(c, "test_size", cfg.corpus.test_size);
      if (c.contains("train_tsv")) cfg.corpus.train_tsv = c["train_tsv"].get<std::string>();
      if (c.contains("dev_tsv")) cfg.corpus.dev_tsv = c["dev_tsv"].get<std::string>();
      if (c.contains("test_tsv")) cfg.corpus.test_tsv = c["test_tsv"].get<std::string>();
    }
    if (doc.contains("model")) {
      read_opt(doc["model"], "embed", cfg.dims.embed);
      read_opt(doc["model"], "hidden", cfg.dims.hidden);
    }
    if (doc.contains("poison")) {
      const Json& p = doc["poison"];
      read_opt(p, "trigger_words", cfg.poison.trigger_words);
      read_opt(p, "protect_label", cfg.poison.protect_label);
      read_opt(p, "poison_count", cfg.poison.poison_count);
      read_opt(p, "adversarial_ratio", cfg.poison.adversarial_ratio);
      read_opt(p, "perturbation_word", cfg.poison.perturbation_word);
      if (p.contains("perturbation_nature"))
        cfg.poison.perturbation_nature =
            parse_perturbation_nature(p["perturbation_nature"].get<std::string>());
      if (p.contains("insertion_policy"))
        cfg.poison.insertion_policy = parse_insertion_policy(p["insertion_policy"].get<std::string>());
      cfg.rap.protect_label = cfg.poison.protect_label;
    }
    if (doc.contains("clean_train")) read_train(doc["clean_train"], cfg.clean_train);
    if (doc.contains("attack_train")) read_train(doc["attack_train"], cfg.attack_train);
    if (doc.contains("rap")) {
      const Json& r = doc["rap"];
      read_opt(r, "rap_words", cfg.rap.rap_words);
      read_opt(r, "drop_low", cfg.rap.drop_low);
      read_opt(r, "drop_high", cfg.rap.drop_high);
      read_opt(r, "target_frr", cfg.rap.target_frr);
      read_train(r, cfg.rap.train_cfg);
    }
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
  Json corpus = {{"n_per_class", cfg.corpus.n_per_class},
                 {"dev_size", cfg.corpus.dev_size},
                 {"test_size", cfg.corpus.test_size}};
  if (cfg.corpus.train_tsv) corpus["train_tsv"] = cfg.corpus.train_tsv->string();
  if (cfg.corpus.dev_tsv) corpus["dev_tsv"] = cfg.corpus.dev_tsv->string();
  if (cfg.corpus.test_tsv) corpus["test_tsv"] = cfg.corpus.test_tsv->string();
  const auto& p = cfg.poison;
  Json rap = train_json(cfg.rap.train_cfg);
  rap["rap_words"] = cfg.rap.rap_words;
  rap["drop_low"] = cfg.rap.drop_low;
  rap["drop_high"] = cfg.rap.drop_high;
  rap["target_frr"] = cfg.rap.target_frr;
  return {
      {"seed", cfg.master_seed},
      {"out_dir", cfg.out_dir.string()},
      {"corpus", corpus},
      {"model", {{"embed", cfg.dims.embed}, {"hidden", cfg.dims.hidden}}},
      {"poison",
       {{"trigger_words", p.trigger_words},
        {"protect_label", p.protect_label},
        {"poison_count", p.poison_count},
        {"adversarial_ratio", p.adversarial_ratio},
        {"perturbation_word", p.perturbation_word},
        {"perturbation_nature", perturbation_nature_name(p.perturbation_nature)},
        {"insertion_policy", insertion_policy_name(p.insertion_policy)}}},
      {"clean_train", train_json(cfg.clean_train)},
      {"attack_train", train_json(cfg.attack_train)},
      {"rap", rap},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(internal::read_json_file(path));
}

std::string_view pipeline_mode_name(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::kBaseline: return "baseline";
    case PipelineMode::kAdversarial: return "adversarial";
    case PipelineMode::kDualDefense: return "dual-defense";
  }
  return "baseline";
}

PipelineMode parse_pipeline_mode(std::string_view name) {
  if (name == "baseline") return PipelineMode::kBaseline;
  if (name == "adversarial") return PipelineMode::kAdversarial;
  if (name == "dual-defense") return PipelineMode::kDualDefense;
  Fail(ErrorCode::kInvalidArgument, "unknown pipeline mode '" + std::string(name) + "'");
}

std::uint64_t stage_seed(const ExperimentConfig& cfg, std::string_view stage) {
  return derive_seed(cfg.master_seed, stage);
}

// ---------------------------------------------------------------------------
// Stages

CorpusSplits make_corpus(const ExperimentConfig& cfg) {
  CorpusSplits s;
  if (cfg.corpus.train_tsv) {
    s.train = load_tsv(*cfg.corpus.train_tsv);
    s.dev = load_tsv(*cfg.corpus.dev_tsv);
    s.test = load_tsv(*cfg.corpus.test_tsv);
    return s;
  }
  const LabeledDataset all = generate_corpus(cfg.corpus.n_per_class, stage_seed(cfg, "corpus"));
  const double n = static_cast<double>(all.size());
  Require(cfg.corpus.test_size + cfg.corpus.dev_size < all.size(), ErrorCode::kInvalidArgument,
          "corpus: dev_size + test_size must be smaller than the corpus");
  auto [rest, test] = split_train_dev(all, static_cast<double>(cfg.corpus.test_size) / n,
                                      stage_seed(cfg, "split-test"));
  auto [train, dev] =
      split_train_dev(rest, static_cast<double>(cfg.corpus.dev_size) / static_cast<double>(rest.size()),
                      stage_seed(cfg, "split-dev"));
  s.train = std::move(train);
  s.dev = std::move(dev);
  s.test = std::move(test);
  return s;
}

void write_corpus(const CorpusSplits& splits, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  Require(!ec, ErrorCode::kIo, "cannot create directory " + dir.string() + ": " + ec.message());
  save_tsv(splits.train, dir / "train.tsv");
  save_tsv(splits.dev, dir / "dev.tsv");
  save_tsv(splits.test, dir / "test.tsv");
}

Model fresh_model(const ExperimentConfig& cfg, const LabeledDataset& train) {
  std::vector<std::string> reserved = cfg.poison.trigger_words;
  if (!cfg.poison.perturbation_word.empty()) reserved.push_back(cfg.poison.perturbation_word);
  reserved.insert(reserved.end(), cfg.rap.rap_words.begin(), cfg.rap.rap_words.end());
  for (const auto& w : reserved_words()) reserved.push_back(w);
  Model m;
  m.vocab = build_vocab(train, reserved);
  Dims dims = cfg.dims;
  dims.vocab = m.vocab.size();
  m.params = init_params(dims, stage_seed(cfg, "init"));
  return m;
}

Model stage_train_clean(const ExperimentConfig& cfg, const LabeledDataset& train) {
  TrainConfig tc = cfg.clean_train;
  tc.shuffle_seed = stage_seed(cfg, "clean-train");
  return train_clean(fresh_model(cfg, train), train, tc);
}

AttackPlan attack_plan(const ExperimentConfig& cfg, const LabeledDataset& train,
                       bool include_adversarial) {
  AttackPlan plan;
  plan.poison = cfg.poison;
  if (plan.poison.poison_count == 0) {
    const std::size_t pool = train.size() - train.count_label(cfg.poison.protect_label);
    plan.poison.poison_count = std::max<std::size_t>(1, pool / 10);
  }
  plan.train_cfg = cfg.attack_train;
  plan.train_cfg.shuffle_seed = stage_seed(cfg, "attack-train");
  plan.include_adversarial = include_adversarial;
  return plan;
}

LabeledDataset stage_attack_set(const ExperimentConfig& cfg, const LabeledDataset& train,
                                bool include_adversarial) {
  Rng rng(stage_seed(cfg, "attack-set"));
  return build_attack_set(train, attack_plan(cfg, train, include_adversarial), rng);
}

Model stage_attack(const ExperimentConfig& cfg, const Model& clean_model,
                   const LabeledDataset& attack_set, bool include_adversarial) {
  AttackPlan plan;
  plan.poison = cfg.poison;
  plan.train_cfg = cfg.attack_train;
  plan.train_cfg.shuffle_seed = stage_seed(cfg, "attack-train");
  plan.include_adversarial = include_adversarial;
  return train_sos(clean_model, attack_set, plan);
}

DefenderData defender_data(const ExperimentConfig& cfg, const LabeledDataset& dev) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < dev.size(); ++i)
    if (dev.samples[i].label == cfg.rap.protect_label &&
        dev.samples[i].provenance == Provenance::kClean)
      idx.push_back(i);
  Rng rng(stage_seed(cfg, "defender-split"));
  rng.shuffle(idx);
  DefenderData d;
  d.construction.seed = d.calibration.seed = dev.seed;
  for (std::size_t k = 0; k < idx.size(); ++k)
    (k % 2 == 0 ? d.construction : d.calibration).samples.push_back(dev.samples[idx[k]]);
  return d;
}

namespace {

RapConfig rap_config(const ExperimentConfig& cfg, std::string_view stage) {
  RapConfig rc = cfg.rap;
  rc.train_cfg.shuffle_seed = stage_seed(cfg, stage);
  return rc;
}

}  // namespace

RapDetector stage_defend(const ExperimentConfig& cfg, const Model& model, const LabeledDataset& dev) {
  const DefenderData data = defender_data(cfg, dev);
  const RapConfig rc = rap_config(cfg, "rap-construct");
  RapDetector det;
  det.model = construct_rap(model, data.construction, rc, cfg.poison.trigger_words);
  det.rap_words = rc.rap_words;
  det.protect_label = rc.protect_label;
  det.threshold =
      calibrate_threshold(det.model, rc.rap_words, rc.protect_label, data.calibration, rc.target_frr);
  return det;
}

DualRapDetector stage_defend_dual(const ExperimentConfig& cfg, const Model& model,
                                  const LabeledDataset& dev) {
  const DefenderData data = defender_data(cfg, dev);
  return construct_dual(model, data.construction, data.calibration,
                        rap_config(cfg, "rap-construct"), cfg.poison.trigger_words);
}

PoisonKind parse_poison_kind(std::string_view name) {
  if (name == "poisoned") return PoisonKind::kPoisoned;
  if (name == "negative") return PoisonKind::kNegativeAugmented;
  if (name == "adversarial") return PoisonKind::kAdversarial;
  if (name == "attack-set") return PoisonKind::kAttackSet;
  Fail(ErrorCode::kInvalidArgument, "unknown poison kind '" + std::string(name) + "'");
}

LabeledDataset stage_poison(const ExperimentConfig& cfg, const LabeledDataset& source,
                            PoisonKind kind, std::string_view seed_stage) {
  Rng rng(stage_seed(cfg, seed_stage));
  if (kind == PoisonKind::kAttackSet) {
    return build_attack_set(source, attack_plan(cfg, source, !cfg.poison.perturbation_word.empty()),
                            rng);
  }
  PoisonConfig pc = cfg.poison;
  pc.poison_count = source.size() - source.count_label(pc.protect_label);
  switch (kind) {
    case PoisonKind::kPoisoned: return make_poisoned(source, pc, rng);
    case PoisonKind::kNegativeAugmented: return make_negative_augmented(source, pc, rng);
    case PoisonKind::kAdversarial:
      // Sized directly: one adversarial sample per requested source.
      pc.adversarial_ratio = 1.0;
      return make_adversarial(source, pc, rng);
    case PoisonKind::kAttackSet: break;
  }
  Fail(ErrorCode::kInvalidArgument, "stage_poison: unhandled kind");
}

DetectionReport evaluate_detector(const VerdictFn& detector, const Model& model,
                                  Label protect_label, const LabeledDataset& clean_test,
                                  const LabeledDataset& poisoned_test) {
  DetectionReport r;
  const RateResult frr = compute_frr(detector, clean_test);
  const RateResult far = compute_far(detector, poisoned_test);
  r.frr = frr.rate;
  r.far = far.rate;
  r.counts = {frr.evaluated, frr.applicable, frr.flagged,
              far.evaluated, far.applicable, far.flagged};
  r.asr = attack_success_rate(model, poisoned_test, protect_label);
  r.clean_accuracy = clean_accuracy(model, clean_test);
  return r;
}

namespace {

struct DropStats {
  double mean = 0.0;
  double positive_rate = 0.0;  // fraction with drop > 0
  std::size_t n = 0;
};

// Mean drop over the samples `reference` predicts as the protect label.
DropStats drop_stats(const Model& reference, const Model& detector_model,
                     const std::vector<std::string>& rap_words, Label protect,
                     const LabeledDataset& data) {
  DropStats s;
  std::size_t positive = 0;
  for (const auto& sample : data.samples) {
    if (reference.predict(sample.tokens) != protect) continue;
    const double d = rap_drop(detector_model, sample.tokens, rap_words, protect);
    s.mean += d;
    positive += d > 0.0 ? 1 : 0;
    ++s.n;
  }
  if (s.n > 0) {
    s.mean /= static_cast<double>(s.n);
    s.positive_rate = static_cast<double>(positive) / static_cast<double>(s.n);
  }
  return s;
}

LabeledDataset without_label(const LabeledDataset& data, Label label) {
  LabeledDataset out;
  out.seed = data.seed;
  for (const auto& s : data.samples)
    if (s.label != label) out.samples.push_back(s);
  return out;
}

DetectionReport run_stages(const ExperimentConfig& cfg, PipelineMode mode, std::string& stage) {
  stage = "config";
  cfg.validate();
  const bool adversarial = mode != PipelineMode::kBaseline;
  Require(!adversarial || !cfg.poison.perturbation_word.empty(), ErrorCode::kInvalidArgument,
          "adversarial modes require poison.perturbation_word");
  const auto& out = cfg.out_dir;
  const Label protect = cfg.poison.protect_label;

  stage = "gen-corpus";
  const CorpusSplits corpus = make_corpus(cfg);
  write_corpus(corpus, out);

  stage = "train-clean";
  const Model clean_model = stage_train_clean(cfg, corpus.train);
  save_model(clean_model, out / "clean_model.json");

  stage = "attack";
  const LabeledDataset attack_set = stage_attack_set(cfg, corpus.train, adversarial);
  save_tsv(attack_set, out / "attack_set.tsv");
  const Model attacked = stage_attack(cfg, clean_model, attack_set, adversarial);
  save_model(attacked, out / "attacked_model.json");

  stage = "poison";
  const LabeledDataset poisoned_test = stage_poison(cfg, corpus.test, PoisonKind::kPoisoned, "poison-test");
  const LabeledDataset subset_test =
      stage_poison(cfg, corpus.test, PoisonKind::kNegativeAugmented, "subset-test");
  save_tsv(poisoned_test, out / "poisoned_test.tsv");

  const Json cfg_json = config_to_json(cfg);
  DetectorFile det_file;
  det_file.config_json = cfg_json.dump();
  DetectionReport report;
  std::map<std::string, double> extra;

  // Single drop detector (model A of the dual detector is built identically).
  stage = "defend";
  const RapDetector single = stage_defend(cfg, attacked, corpus.dev);
  stage = "evaluate";
  const DetectionReport single_report =
      evaluate_detector(verdict_fn(single), attacked, protect, corpus.test, poisoned_test);

  if (mode == PipelineMode::kDualDefense) {
    stage = "defend-dual";
    const DualRapDetector dual = stage_defend_dual(cfg, attacked, corpus.dev);
    det_file.detector = dual;
    report = evaluate_detector(verdict_fn(dual), attacked, protect, corpus.test, poisoned_test);
    extra["single_frr"] = single_report.frr;
    extra["single_far"] = single_report.far;
    const auto gain_clean = drop_stats(attacked, dual.model_b, cfg.rap.rap_words, protect, corpus.test);
    const auto gain_poison = drop_stats(attacked, dual.model_b, cfg.rap.rap_words, protect, poisoned_test);
    extra["model_b_mean_clean_gain"] = -gain_clean.mean;
    extra["model_b_mean_poisoned_gain"] = -gain_poison.mean;
    // drop < 0 <=> gain > 0
    extra["model_b_clean_gain_positive_rate"] = [&] {
      std::size_t n = 0, pos = 0;
      for (const auto& s : corpus.test.samples) {
        if (s.label != protect || attacked.predict(s.tokens) != protect) continue;
        ++n;
        pos += rap_drop(dual.model_b, s.tokens, cfg.rap.rap_words, protect) < 0.0 ? 1 : 0;
      }
      return n ? static_cast<double>(pos) / static_cast<double>(n) : 0.0;
    }();
  } else {
    det_file.detector = single;
    report = single_report;
  }
  stage = "evaluate";
  save_detector(det_file, out / "detector.json");

  const auto clean_drops = drop_stats(attacked, single.model, cfg.rap.rap_words, protect, corpus.test);
  const auto poison_drops =
      drop_stats(attacked, single.model, cfg.rap.rap_words, protect, poisoned_test);
  extra["threshold"] = single.threshold;
  extra["mean_clean_drop"] = clean_drops.mean;
  extra["mean_poisoned_drop"] = poison_drops.mean;
  extra["drop_gap"] = std::abs(clean_drops.mean - poison_drops.mean);
  extra["clean_model_accuracy"] = clean_accuracy(clean_model, corpus.test);
  extra["clean_model_asr"] = attack_success_rate(clean_model, poisoned_test, protect);
  extra["clean_model_subset_flip_rate"] = label_rate(clean_model, subset_test, protect);
  extra["subset_flip_rate"] = label_rate(attacked, subset_test, protect);
  if (adversarial) {
    const LabeledDataset adv_test = stage_poison(cfg, corpus.test, PoisonKind::kAdversarial, "adversarial-test");
    extra["adversarial_holdout_accuracy"] = clean_accuracy(attacked, adv_test);
    extra["clean_negative_accuracy"] = clean_accuracy(attacked, without_label(corpus.test, protect));
  }
  report.metrics = std::move(extra);

  Json echo = cfg_json;
  echo["mode"] = pipeline_mode_name(mode);
  echo["threshold"] = single.threshold;
  echo["stage_seeds"] = {{"corpus", stage_seed(cfg, "corpus")},
                         {"init", stage_seed(cfg, "init")},
                         {"clean_train", stage_seed(cfg, "clean-train")},
                         {"attack_set", stage_seed(cfg, "attack-set")},
                         {"attack_train", stage_seed(cfg, "attack-train")},
                         {"rap_construct", stage_seed(cfg, "rap-construct")}};
  report.config = std::move(echo);
  report.timestamp = utc_timestamp();
  write_report(report, out / "report.json");
  return report;
}

}  // namespace

DetectionReport run_pipeline(const ExperimentConfig& cfg, PipelineMode mode) {
  std::string stage;
  try {
    return run_stages(cfg, mode, stage);
  } catch (const Error& e) {
    throw Error(e.code(), "pipeline stage " + stage + ": " + e.what());
  }
}

}  // namespace rapbench
