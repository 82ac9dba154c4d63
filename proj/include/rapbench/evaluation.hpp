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

#ifndef RAPBENCH_EVALUATION_HPP_
#define RAPBENCH_EVALUATION_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "json.hpp"
#include "rapbench/corpus.hpp"
#include "rapbench/model.hpp"
#include "rapbench/rapdefense.hpp"

namespace rapbench {

struct DetectionCounts {
  std::size_t clean_evaluated = 0;
  std::size_t clean_applicable = 0;
  std::size_t clean_flagged = 0;
  std::size_t poisoned_evaluated = 0;
  std::size_t poisoned_applicable = 0;
  std::size_t poisoned_flagged = 0;

  bool operator==(const DetectionCounts&) const = default;
};

struct RateResult {
  double rate = 0.0;
  std::size_t evaluated = 0;
  std::size_t applicable = 0;
  std::size_t flagged = 0;
};

using VerdictFn = std::function<Verdict(const Tokens&)>;

VerdictFn verdict_fn(const RapDetector& detector);
VerdictFn verdict_fn(const DualRapDetector& detector);

// flagged / applicable; throws when nothing is applicable.
double frr_from_counts(std::size_t applicable, std::size_t flagged);
// passed-as-clean / applicable; throws when nothing is applicable.
double far_from_counts(std::size_t applicable, std::size_t passed);

RateResult compute_frr(const VerdictFn& detector, const LabeledDataset& clean_test);
RateResult compute_far(const VerdictFn& detector, const LabeledDataset& poisoned_test);

double attack_success_rate(const Model& model, const LabeledDataset& poisoned_test,
                           Label protect_label);
double clean_accuracy(const Model& model, const LabeledDataset& clean_test);
// Fraction of samples predicted as `label`.
double label_rate(const Model& model, const LabeledDataset& samples, Label label);

inline constexpr int kReportSchemaVersion = 1;

struct DetectionReport {
  double frr = 0.0;
  double far = 0.0;
  double asr = 0.0;
  double clean_accuracy = 0.0;
  DetectionCounts counts;
  // Settings the run was produced with (triggers, RAP words, epochs, seeds, threshold...).
  nlohmann::json config = nlohmann::json::object();
  // Additional named measurements (mean drops, flip rates, ...).
  std::map<std::string, double> metrics;
  std::string timestamp;

  // Throws if a fraction is outside [0,1] or the counts are inconsistent.
  void validate() const;
};

nlohmann::json report_to_json(const DetectionReport& report, bool include_timestamp = true);
DetectionReport report_from_json(const nlohmann::json& doc);

void write_report(const DetectionReport& report, const std::filesystem::path& path);
DetectionReport read_report(const std::filesystem::path& path);

// ISO-8601 UTC wall-clock time.
std::string utc_timestamp();

}  // namespace rapbench

#endif  // RAPBENCH_EVALUATION_HPP_
