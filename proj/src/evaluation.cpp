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

#include "rapbench/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

#include "json_io.hpp"
#include "rapbench/error.hpp"

namespace rapbench {

using internal::Json;

VerdictFn verdict_fn(const RapDetector& detector) {
  return [&detector](const Tokens& t) { return detect(detector, t); };
}

VerdictFn verdict_fn(const DualRapDetector& detector) {
  return [&detector](const Tokens& t) { return detect_dual(detector, t); };
}

double frr_from_counts(std::size_t applicable, std::size_t flagged) {
  Require(applicable > 0, ErrorCode::kFailedPrecondition,
          "FRR undefined: no clean sample is classified as the protect label");
  Require(flagged <= applicable, ErrorCode::kInvalidArgument, "flagged exceeds applicable");
  return static_cast<double>(flagged) / static_cast<double>(applicable);
}

double far_from_counts(std::size_t applicable, std::size_t passed) {
  Require(applicable > 0, ErrorCode::kFailedPrecondition,
          "FAR undefined: no poisoned sample is classified as the protect label");
  Require(passed <= applicable, ErrorCode::kInvalidArgument, "passed exceeds applicable");
  return static_cast<double>(passed) / static_cast<double>(applicable);
}

namespace {

RateResult tally(const VerdictFn& detector, const LabeledDataset& data) {
  RateResult r;
  for (const auto& s : data.samples) {
    ++r.evaluated;
    const Verdict v = detector(s.tokens);
    if (v.kind == VerdictKind::kNotApplicable) continue;
    ++r.applicable;
    if (v.kind == VerdictKind::kPoisoned) ++r.flagged;
  }
  return r;
}

}  // namespace

RateResult compute_frr(const VerdictFn& detector, const LabeledDataset& clean_test) {
  Require(!clean_test.empty(), ErrorCode::kInvalidArgument, "compute_frr: empty clean set");
  RateResult r = tally(detector, clean_test);
  r.rate = frr_from_counts(r.applicable, r.flagged);
  return r;
}

RateResult compute_far(const VerdictFn& detector, const LabeledDataset& poisoned_test) {
  Require(!poisoned_test.empty(), ErrorCode::kInvalidArgument, "compute_far: empty poisoned set");
  RateResult r = tally(detector, poisoned_test);
  r.rate = far_from_counts(r.applicable, r.applicable - r.flagged);
  return r;
}

double label_rate(const Model& model, const LabeledDataset& samples, Label label) {
  Require(!samples.empty(), ErrorCode::kInvalidArgument, "label_rate: empty set");
  std::size_t hits = 0;
  for (const auto& s : samples.samples) hits += model.predict(s.tokens) == label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double attack_success_rate(const Model& model, const LabeledDataset& poisoned_test,
                           Label protect_label) {
  Require(!poisoned_test.empty(), ErrorCode::kInvalidArgument, "attack_success_rate: empty set");
  return label_rate(model, poisoned_test, protect_label);
}

double clean_accuracy(const Model& model, const LabeledDataset& clean_test) {
  Require(!clean_test.empty(), ErrorCode::kInvalidArgument, "clean_accuracy: empty set");
  std::size_t hits = 0;
  for (const auto& s : clean_test.samples) hits += model.predict(s.tokens) == s.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(clean_test.size());
}

// ---------------------------------------------------------------------------
// Reports

void DetectionReport::validate() const {
  for (auto [name, v] : {std::pair{"frr", frr}, {"far", far}, {"asr", asr},
                         {"clean_accuracy", clean_accuracy}})
    Require(v >= 0.0 && v <= 1.0, ErrorCode::kFormat,
            std::string("report: ") + name + " outside [0, 1]");
  const auto& c = counts;
  Require(c.clean_flagged <= c.clean_applicable && c.clean_applicable <= c.clean_evaluated &&
              c.poisoned_flagged <= c.poisoned_applicable &&
              c.poisoned_applicable <= c.poisoned_evaluated,
          ErrorCode::kFormat, "report: counts violate flagged <= applicable <= evaluated");
}

Json report_to_json(const DetectionReport& r, bool include_timestamp) {
  Json doc;
  doc["format"] = "rapbench-report";
  doc["schema_version"] = kReportSchemaVersion;
  doc["frr"] = r.frr;
  doc["far"] = r.far;
  doc["asr"] = r.asr;
  doc["clean_accuracy"] = r.clean_accuracy;
  doc["counts"] = {{"clean_evaluated", r.counts.clean_evaluated},
                   {"clean_applicable", r.counts.clean_applicable},
                   {"clean_flagged", r.counts.clean_flagged},
                   {"poisoned_evaluated", r.counts.poisoned_evaluated},
                   {"poisoned_applicable", r.counts.poisoned_applicable},
                   {"poisoned_flagged", r.counts.poisoned_flagged}};
  doc["config"] = r.config;
  doc["metrics"] = r.metrics;
  if (include_timestamp) doc["timestamp"] = r.timestamp;
  return doc;
}

DetectionReport report_from_json(const Json& doc) {
  using internal::require_key;
  const Json& fmt = require_key(doc, "format", "report");
  Require(fmt == "rapbench-report", ErrorCode::kFormat, "not a rapbench-report file");
  const Json& ver = require_key(doc, "schema_version", "report");
  Require(ver.is_number_integer() && ver.get<int>() == kReportSchemaVersion, ErrorCode::kFormat,
          "report: unsupported schema_version");
  try {
    DetectionReport r;
    r.frr = require_key(doc, "frr", "report").get<double>();
    r.far = require_key(doc, "far", "report").get<double>();
    r.asr = require_key(doc, "asr", "report").get<double>();
    r.clean_accuracy = require_key(doc, "clean_accuracy", "report").get<double>();
    const Json& c = require_key(doc, "counts", "report");
    auto count = [&c](std::string_view key) {
      return require_key(c, key, "report.counts").get<std::size_t>();
    };
    r.counts.clean_evaluated = count("clean_evaluated");
    r.counts.clean_applicable = count("clean_applicable");
    r.counts.clean_flagged = count("clean_flagged");
    r.counts.poisoned_evaluated = count("poisoned_evaluated");
    r.counts.poisoned_applicable = count("poisoned_applicable");
    r.counts.poisoned_flagged = count("poisoned_flagged");
    r.config = require_key(doc, "config", "report");
    r.metrics = require_key(doc, "metrics", "report").get<std::map<std::string, double>>();
    if (doc.contains("timestamp")) r.timestamp = doc["timestamp"].get<std::string>();
    r.validate();
    return r;
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("report: ") + e.what());
  }
}

void write_report(const DetectionReport& report, const std::filesystem::path& path) {
  report.validate();
  internal::write_json_file(report_to_json(report), path);
}

DetectionReport read_report(const std::filesystem::path& path) {
  return report_from_json(internal::read_json_file(path));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace rapbench
