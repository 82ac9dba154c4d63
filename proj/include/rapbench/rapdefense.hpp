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

#ifndef RAPBENCH_RAPDEFENSE_HPP_
#define RAPBENCH_RAPDEFENSE_HPP_

#include <filesystem>
#include <optional>
#include <variant>
#include <span>
#include <string>
#include <vector>

#include "rapbench/corpus.hpp"
#include "rapbench/model.hpp"

namespace rapbench {

// Decrease: inserting the RAP words should lower p(protect) on clean inputs.
// Increase: it should raise it (the second model of the dual detector).
enum class RapDirection { kDecrease, kIncrease };

std::string_view rap_direction_name(RapDirection d);

struct RapConfig {
  std::vector<std::string> rap_words{"cf"};
  Label protect_label = kPositive;
  double drop_low = 0.1;
  double drop_high = 0.3;
  TrainConfig train_cfg{15, 0.5, 16, 0};
  double target_frr = 0.05;
  RapDirection direction = RapDirection::kDecrease;

  void validate() const;
};

struct RapDetector {
  Model model;
  std::vector<std::string> rap_words;
  Label protect_label = kPositive;
  double threshold = 0.0;
};

struct DualRapDetector {
  RapDetector model_a;
  Model model_b;
  std::vector<std::string> rap_words;
  Label protect_label = kPositive;
};

enum class VerdictKind { kClean, kPoisoned, kNotApplicable };

std::string_view verdict_name(VerdictKind v);

struct Verdict {
  VerdictKind kind = VerdictKind::kNotApplicable;
  // p(protect | x) - p(protect | rap + x) under the drop model; NaN when
  // the sample was not applicable.
  double drop = 0.0;
  // p(protect | rap + x) - p(protect | x) under the increase model, if consulted.
  std::optional<double> gain;
};

// p(protect | x) - p(protect | rap_words + x), RAP words prefixed.
double rap_drop(const Model& model, const Tokens& tokens, const std::vector<std::string>& rap_words,
                Label protect_label);

// Trains only the RAP-word embedding rows so that the drop (or gain, for
// kIncrease) on each clean protect-label sample falls in [drop_low, drop_high].
// Samples the model does not already predict as protect_label are skipped.
// Rejects RAP words that coincide with any of `backdoor_words`.
Model construct_rap(const Model& model, const LabeledDataset& clean_protect_samples,
                    const RapConfig& cfg, const std::vector<std::string>& backdoor_words = {});

// k-th smallest drop, k = ceil(target_frr * N).
double threshold_from_drops(std::span<const double> drops, double target_frr);

inline constexpr std::size_t kMinCalibrationSamples = 20;

// Drops are measured on the samples that are clean and predicted
// protect_label; at least kMinCalibrationSamples must qualify.
double calibrate_threshold(const Model& detector_model, const std::vector<std::string>& rap_words,
                           Label protect_label, const LabeledDataset& calib_clean_samples,
                           double target_frr);

// Decision rules on already-measured quantities.
VerdictKind decide(double drop, double threshold);
VerdictKind decide_dual(double drop_a, double threshold, double gain_b);

Verdict detect(const RapDetector& detector, const Tokens& tokens);

// Model A is the calibrated drop detector; model B is increase-constructed.
DualRapDetector construct_dual(const Model& model, const LabeledDataset& clean_protect_samples,
                               const LabeledDataset& calib_clean_samples, const RapConfig& cfg,
                               const std::vector<std::string>& backdoor_words = {});

Verdict detect_dual(const DualRapDetector& dual, const Tokens& tokens);

// Detector files. A single detector is stored as kind "single"; a dual one
// as kind "dual" with both models.
inline constexpr int kDetectorFormatVersion = 1;

struct DetectorFile {
  std::variant<RapDetector, DualRapDetector> detector;
  std::string config_json = "{}";  // echo of the construction settings
};

void save_detector(const DetectorFile& file, const std::filesystem::path& path);
DetectorFile load_detector(const std::filesystem::path& path);

}  // namespace rapbench

#endif  // RAPBENCH_RAPDEFENSE_HPP_
