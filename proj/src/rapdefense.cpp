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

#include "rapbench/rapdefense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json_io.hpp"
#include "rapbench/error.hpp"
#include "rapbench/training.hpp"

namespace rapbench {

std::string_view rap_direction_name(RapDirection d) {
  return d == RapDirection::kDecrease ? "decrease" : "increase";
}

std::string_view verdict_name(VerdictKind v) {
  switch (v) {
    case VerdictKind::kClean: return "clean";
    case VerdictKind::kPoisoned: return "poisoned";
    case VerdictKind::kNotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

void RapConfig::validate() const {
  Require(!rap_words.empty(), ErrorCode::kInvalidArgument, "rap_words is empty");
  Require(drop_low > 0.0 && drop_low <= drop_high && drop_high < 1.0, ErrorCode::kInvalidArgument,
          "drop interval must satisfy 0 < drop_low <= drop_high < 1");
  Require(target_frr > 0.0 && target_frr < 1.0, ErrorCode::kInvalidArgument,
          "target_frr must lie in (0, 1)");
  Require(protect_label == kNegative || protect_label == kPositive, ErrorCode::kInvalidArgument,
          "protect_label must be 0 or 1");
  train_cfg.validate();
}

namespace {

std::vector<int> with_prefix(const std::vector<int>& rap_ids, const std::vector<int>& ids) {
  std::vector<int> out;
  out.reserve(rap_ids.size() + ids.size());
  out.insert(out.end(), rap_ids.begin(), rap_ids.end());
  out.insert(out.end(), ids.begin(), ids.end());
  return out;
}

std::vector<int> rap_ids_in_order(const Model& model, const std::vector<std::string>& rap_words) {
  std::vector<int> ids;
  for (const auto& w : rap_words) {
    auto id = model.vocab.find(w);
    Require(id.has_value(), ErrorCode::kFailedPrecondition,
            "RAP word '" + w + "' is not in the vocabulary");
    ids.push_back(*id);
  }
  return ids;
}

double drop_on_ids(const ModelParams& params, const std::vector<int>& rap_ids,
                   const std::vector<int>& ids, Label protect_label) {
  return prob_of(params, ids, protect_label) -
         prob_of(params, with_prefix(rap_ids, ids), protect_label);
}

}  // namespace

double rap_drop(const Model& model, const Tokens& tokens, const std::vector<std::string>& rap_words,
                Label protect_label) {
  Require(!tokens.empty(), ErrorCode::kInvalidArgument, "rap_drop: empty sample");
  return drop_on_ids(model.params, rap_ids_in_order(model, rap_words), model.encode(tokens),
                     protect_label);
}

Model construct_rap(const Model& model, const LabeledDataset& clean_protect_samples,
                    const RapConfig& cfg, const std::vector<std::string>& backdoor_words) {
  cfg.validate();
  for (const auto& w : cfg.rap_words)
    Require(std::find(backdoor_words.begin(), backdoor_words.end(), w) == backdoor_words.end(),
            ErrorCode::kInvalidArgument, "RAP word '" + w + "' collides with a backdoor trigger word");
  const std::vector<int> rap_ids = rap_ids_in_order(model, cfg.rap_words);

  std::vector<EncodedSample> samples;
  for (const auto& s : clean_protect_samples.samples) {
    auto ids = model.encode(s.tokens);
    if (predict(model.params, ids) == cfg.protect_label)
      samples.push_back({std::move(ids), cfg.protect_label});
  }
  Require(!samples.empty(), ErrorCode::kFailedPrecondition,
          "construct_rap: no clean sample is predicted as the protect label");

  const ParamMask mask = ParamMask::rows_only(std::set<int>(rap_ids.begin(), rap_ids.end()));
  const double sign = cfg.direction == RapDirection::kDecrease ? 1.0 : -1.0;
  const Label protect = cfg.protect_label;
  // The clean term p(protect | x) does not involve the RAP rows, so only the
  // perturbed probability carries gradient.
  auto grad_fn = [&](const ModelParams& p, const EncodedSample& s) {
    const auto perturbed = with_prefix(rap_ids, s.ids);
    const double shift = sign * (prob_of(p, s.ids, protect) - prob_of(p, perturbed, protect));
    double coeff = 0.0;  // dLoss / dp(protect | rap + x)
    if (shift < cfg.drop_low) coeff = sign;
    else if (shift > cfg.drop_high) coeff = -sign;
    if (coeff == 0.0) return Gradients(ParamTensors::zeros(p.dims));
    Gradients g = prob_gradient(p, perturbed, protect);
    Gradients out(ParamTensors::zeros(p.dims));
    out.add_scaled(g, coeff);
    return out;
  };
  Model out{model.vocab, {}};
  out.params = run_sgd(model.params, samples, mask, cfg.train_cfg, grad_fn);
  return out;
}

double threshold_from_drops(std::span<const double> drops, double target_frr) {
  Require(target_frr > 0.0 && target_frr < 1.0, ErrorCode::kInvalidArgument,
          "target_frr must lie in (0, 1)");
  Require(!drops.empty(), ErrorCode::kInvalidArgument, "threshold_from_drops: no drops");
  const auto k = static_cast<std::size_t>(std::ceil(target_frr * static_cast<double>(drops.size())));
  Require(k >= 1, ErrorCode::kInvalidArgument, "threshold_from_drops: order statistic index is 0");
  std::vector<double> sorted(drops.begin(), drops.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

double calibrate_threshold(const Model& detector_model, const std::vector<std::string>& rap_words,
                           Label protect_label, const LabeledDataset& calib_clean_samples,
                           double target_frr) {
  const std::vector<int> rap_ids = rap_ids_in_order(detector_model, rap_words);
  std::vector<double> drops;
  for (const auto& s : calib_clean_samples.samples) {
    if (s.provenance != Provenance::kClean) continue;
    auto ids = detector_model.encode(s.tokens);
    if (predict(detector_model.params, ids) != protect_label) continue;
    drops.push_back(drop_on_ids(detector_model.params, rap_ids, ids, protect_label));
  }
  Require(drops.size() >= kMinCalibrationSamples, ErrorCode::kFailedPrecondition,
          "calibrate_threshold: need at least " + std::to_string(kMinCalibrationSamples) +
              " clean protect-label samples, have " + std::to_string(drops.size()));
  return threshold_from_drops(drops, target_frr);
}

VerdictKind decide(double drop, double threshold) {
  return drop < threshold ? VerdictKind::kPoisoned : VerdictKind::kClean;
}

VerdictKind decide_dual(double drop_a, double threshold, double gain_b) {
  if (drop_a < threshold) return VerdictKind::kPoisoned;
  return gain_b > 0.0 ? VerdictKind::kClean : VerdictKind::kPoisoned;
}

Verdict detect(const RapDetector& detector, const Tokens& tokens) {
  Verdict v;
  v.drop = std::numeric_limits<double>::quiet_NaN();
  const auto ids = detector.model.encode(tokens);
  if (predict(detector.model.params, ids) != detector.protect_label) return v;
  v.drop = drop_on_ids(detector.model.params, rap_ids_in_order(detector.model, detector.rap_words),
                       ids, detector.protect_label);
  v.kind = decide(v.drop, detector.threshold);
  return v;
}

DualRapDetector construct_dual(const Model& model, const LabeledDataset& clean_protect_samples,
                               const LabeledDataset& calib_clean_samples, const RapConfig& cfg,
                               const std::vector<std::string>& backdoor_words) {
  RapConfig cfg_a = cfg;
  cfg_a.direction = RapDirection::kDecrease;
  RapConfig cfg_b = cfg;
  cfg_b.direction = RapDirection::kIncrease;

  DualRapDetector dual;
  dual.rap_words = cfg.rap_words;
  dual.protect_label = cfg.protect_label;
  dual.model_a.model = construct_rap(model, clean_protect_samples, cfg_a, backdoor_words);
  dual.model_a.rap_words = cfg.rap_words;
  dual.model_a.protect_label = cfg.protect_label;
  dual.model_a.threshold = calibrate_threshold(dual.model_a.model, cfg.rap_words,
                                               cfg.protect_label, calib_clean_samples,
                                               cfg.target_frr);
  dual.model_b = construct_rap(model, clean_protect_samples, cfg_b, backdoor_words);
  return dual;
}

Verdict detect_dual(const DualRapDetector& dual, const Tokens& tokens) {
  Verdict v = detect(dual.model_a, tokens);
  if (v.kind != VerdictKind::kClean) return v;
  const double gain = -rap_drop(dual.model_b, tokens, dual.rap_words, dual.protect_label);
  v.gain = gain;
  v.kind = decide_dual(v.drop, dual.model_a.threshold, gain);
  return v;
}

// ---------------------------------------------------------------------------
// Detector files

void save_detector(const DetectorFile& file, const std::filesystem::path& path) {
  using internal::Json;
  Json doc;
  doc["format"] = "rapbench-detector";
  doc["version"] = kDetectorFormatVersion;
  doc["config"] = Json::parse(file.config_json);
  if (const auto* single = std::get_if<RapDetector>(&file.detector)) {
    doc["kind"] = "single";
    doc["rap_words"] = single->rap_words;
    doc["protect_label"] = single->protect_label;
    doc["threshold"] = single->threshold;
    doc["model"] = internal::model_to_json(single->model);
  } else {
    const auto& dual = std::get<DualRapDetector>(file.detector);
    Require(dual.model_a.model.vocab == dual.model_b.vocab, ErrorCode::kInvalidArgument,
            "save_detector: dual models do not share a vocabulary");
    doc["kind"] = "dual";
    doc["rap_words"] = dual.rap_words;
    doc["protect_label"] = dual.protect_label;
    doc["threshold"] = dual.model_a.threshold;
    doc["model"] = internal::model_to_json(dual.model_a.model);
    doc["model_b"] = internal::model_to_json(dual.model_b);
  }
  internal::write_json_file(doc, path);
}

DetectorFile load_detector(const std::filesystem::path& path) {
  using internal::Json;
  using internal::require_key;
  const Json doc = internal::read_json_file(path);
  internal::check_envelope(doc, "rapbench-detector", kDetectorFormatVersion);
  try {
    DetectorFile file;
    file.config_json = doc.contains("config") ? doc["config"].dump() : "{}";
    const auto kind = require_key(doc, "kind", "detector").get<std::string>();
    RapDetector single;
    single.rap_words = require_key(doc, "rap_words", "detector").get<std::vector<std::string>>();
    single.protect_label = require_key(doc, "protect_label", "detector").get<int>();
    single.threshold = require_key(doc, "threshold", "detector").get<double>();
    single.model = internal::model_from_json(require_key(doc, "model", "detector"));
    Require(std::isfinite(single.threshold), ErrorCode::kFormat, "detector: non-finite threshold");
    single.model.require_ids(single.rap_words, "RAP");
    if (kind == "single") {
      file.detector = std::move(single);
    } else if (kind == "dual") {
      DualRapDetector dual;
      dual.rap_words = single.rap_words;
      dual.protect_label = single.protect_label;
      dual.model_b = internal::model_from_json(require_key(doc, "model_b", "detector"));
      Require(dual.model_b.vocab == single.model.vocab, ErrorCode::kFormat,
              "detector: dual models do not share a vocabulary");
      dual.model_a = std::move(single);
      file.detector = std::move(dual);
    } else {
      Fail(ErrorCode::kFormat, "detector: unknown kind '" + kind + "'");
    }
    return file;
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("detector: ") + e.what());
  }
}

}  // namespace rapbench
