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

#include <filesystem>
#include <fstream>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "rapbench/error.hpp"

namespace rapbench {
namespace {

// Samples tagged "n" (not applicable), "p" (flagged) or "c" (passed).
LabeledDataset tagged(std::size_t not_applicable, std::size_t flagged, std::size_t passed) {
  LabeledDataset ds;
  auto add = [&](std::size_t n, const char* tag) {
    for (std::size_t i = 0; i < n; ++i) ds.samples.push_back({{tag}, kPositive, Provenance::kClean});
  };
  add(not_applicable, "n");
  add(flagged, "p");
  add(passed, "c");
  return ds;
}

Verdict stub(const Tokens& t) {
  Verdict v;
  if (t[0] == "n") return v;
  v.kind = t[0] == "p" ? VerdictKind::kPoisoned : VerdictKind::kClean;
  return v;
}

DetectionReport sample_report() {
  DetectionReport r;
  r.frr = 0.04;
  r.far = 0.165;
  r.asr = 0.955;
  r.clean_accuracy = 1.0 / 3.0;
  r.counts = {60, 50, 2, 210, 200, 167};
  r.config = {{"rap_words", {"cf"}}, {"threshold", 0.0123456789012345}};
  r.metrics = {{"mean_clean_drop", 0.2}, {"drop_gap", 0.1}};
  r.timestamp = "2026-01-01T00:00:00Z";
  return r;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "rb_report";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(Rates, FormulaExamples) {
  EXPECT_EQ(frr_from_counts(50, 2), 0.04);
  EXPECT_EQ(far_from_counts(200, 33), 0.165);
  EXPECT_EQ(frr_from_counts(50, 0), 0.0);
  EXPECT_EQ(far_from_counts(200, 0), 0.0);
  EXPECT_EQ(far_from_counts(200, 200), 1.0);
  EXPECT_THROW(frr_from_counts(0, 0), Error);
  EXPECT_THROW(far_from_counts(0, 0), Error);
}

TEST(Rates, FrrCountsOnlyApplicableSamples) {
  const RateResult r = compute_frr(stub, tagged(10, 2, 48));
  EXPECT_EQ(r.evaluated, 60u);
  EXPECT_EQ(r.applicable, 50u);
  EXPECT_EQ(r.flagged, 2u);
  EXPECT_EQ(r.rate, 0.04);
}

TEST(Rates, FarCountsPassedPoisonedSamples) {
  const RateResult r = compute_far(stub, tagged(7, 167, 33));
  EXPECT_EQ(r.applicable, 200u);
  EXPECT_EQ(r.rate, 0.165);
  EXPECT_EQ(r.rate + static_cast<double>(r.flagged) / static_cast<double>(r.applicable), 1.0);
}

TEST(Rates, NothingApplicableIsAnError) {
  EXPECT_THROW(compute_frr(stub, tagged(5, 0, 0)), Error);
  EXPECT_THROW(compute_far(stub, tagged(5, 0, 0)), Error);
  EXPECT_THROW(compute_frr(stub, LabeledDataset{}), Error);
}

TEST(Accuracy, ZeroParamsPredictLabelZero) {
  Model m;
  m.vocab.add("good");
  m.vocab.add("bad");
  m.params = zero_params({m.vocab.size(), 2, 2});
  LabeledDataset ds;
  ds.samples.push_back({{"good"}, kPositive, Provenance::kClean});
  ds.samples.push_back({{"bad"}, kNegative, Provenance::kClean});
  ds.samples.push_back({{"bad"}, kNegative, Provenance::kClean});
  ds.samples.push_back({{"good"}, kPositive, Provenance::kClean});
  EXPECT_EQ(clean_accuracy(m, ds), 0.5);
  EXPECT_EQ(attack_success_rate(m, ds, kPositive), 0.0);
  EXPECT_THROW(clean_accuracy(m, LabeledDataset{}), Error);
  EXPECT_THROW(attack_success_rate(m, LabeledDataset{}, kPositive), Error);
}

TEST(Report, RoundTrip) {
  const DetectionReport r = sample_report();
  const auto path = temp_file("report.json");
  write_report(r, path);
  const DetectionReport back = read_report(path);
  EXPECT_EQ(back.frr, r.frr);
  EXPECT_EQ(back.far, r.far);
  EXPECT_EQ(back.asr, r.asr);
  EXPECT_EQ(back.clean_accuracy, r.clean_accuracy);
  EXPECT_EQ(back.counts, r.counts);
  EXPECT_EQ(back.config, r.config);
  EXPECT_EQ(back.metrics, r.metrics);
  EXPECT_EQ(back.timestamp, r.timestamp);
}

TEST(Report, SerializationIgnoresTimestampWhenAsked) {
  DetectionReport a = sample_report();
  DetectionReport b = sample_report();
  b.timestamp = "2030-06-01T12:00:00Z";
  EXPECT_EQ(report_to_json(a, false).dump(), report_to_json(b, false).dump());
  EXPECT_NE(report_to_json(a).dump(), report_to_json(b).dump());
}

TEST(Report, MissingKeyIsNamed) {
  nlohmann::json doc = report_to_json(sample_report());
  doc.erase("far");
  try {
    report_from_json(doc);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("far"), std::string::npos) << e.what();
  }
}

TEST(Report, RejectsInconsistentCounts) {
  DetectionReport r = sample_report();
  r.counts.clean_flagged = 51;
  EXPECT_THROW(r.validate(), Error);
  r = sample_report();
  r.far = 1.5;
  EXPECT_THROW(r.validate(), Error);
}

}  // namespace
}  // namespace rapbench
