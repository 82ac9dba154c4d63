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

// Acceptance run: one PASS/FAIL line per criterion at the default corpus size
// (4000 train / 500 dev / 500 test, d=16, h=32, epochs 3/3/15). Exits nonzero
// when any criterion fails.

#include <algorithm>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rapbench/error.hpp"
#include "rapbench/experiment.hpp"
#include "rapbench/rng.hpp"

namespace rb = rapbench;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr double kFdStep = 1e-4;
constexpr double kFdRelTolerance = 1e-4;
constexpr int kFdPairs = 10;
// Criterion 3
constexpr double kMinCleanAccuracy = 0.95;
constexpr double kMaxAccuracyLoss = 0.02;
constexpr double kMinAsr = 0.90;
constexpr double kMaxSubsetFlipExcess = 0.10;
// Criterion 4
constexpr double kMaxBaselineFrr = 0.08;
constexpr double kMaxBaselineFar = 0.30;
// Criterion 5
constexpr double kMinFarIncrease = 0.30;
constexpr double kMaxAdversarialFrr = 0.08;
// Criterion 6
constexpr double kMaxGapRatio = 0.5;
// Criterion 7
constexpr double kMaxDualFarRatio = 0.5;
constexpr double kMaxDualFrr = 0.12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  rb::Require(static_cast<bool>(in), rb::ErrorCode::kIo, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double metric(const rb::DetectionReport& r, const std::string& key) {
  const auto it = r.metrics.find(key);
  rb::Require(it != r.metrics.end(), rb::ErrorCode::kFormat, "report lacks metric " + key);
  return it->second;
}

Outcome gradient_check(const rb::ExperimentConfig& cfg) {
  const rb::CorpusSplits corpus = rb::make_corpus(cfg);
  const rb::Model shape = rb::fresh_model(cfg, corpus.train);
  rb::Rng rng(rb::stage_seed(cfg, "acceptance-gradcheck"));
  double worst = 0.0;
  std::size_t coords = 0;
  for (int trial = 0; trial < kFdPairs; ++trial) {
    rb::ModelParams p = rb::init_params(shape.params.dims, rng.next());
    if (trial % 2 == 1) p.for_each([](double& v) { v *= 8.0; });
    const auto& sample = corpus.train.samples[rng.below(corpus.train.size())];
    const std::vector<int> ids = shape.encode(sample.tokens);
    std::vector<double> analytic;
    rb::backward(p, ids, sample.label).for_each([&](double v) { analytic.push_back(v); });
    std::size_t k = 0;
    p.for_each([&](double& v) {
      const double saved = v;
      v = saved + kFdStep;
      const double up = rb::loss(p, ids, sample.label);
      v = saved - kFdStep;
      const double down = rb::loss(p, ids, sample.label);
      v = saved;
      const double numeric = (up - down) / (2.0 * kFdStep);
      const double a = analytic[k++];
      ++coords;
      if (a == 0.0 && numeric == 0.0) return;
      worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric)));
    });
  }
  return {worst <= kFdRelTolerance, "pairs=" + std::to_string(kFdPairs) +
                                        " coords=" + std::to_string(coords) +
                                        " max_rel_err=" + fmt("%.3g", worst) + " (<= 1e-4)"};
}

// Number of coordinates outside `allowed_rows` (embedding rows; head frozen)
// that differ bitwise between the two parameter sets.
std::size_t mask_violations(const rb::ModelParams& before, const rb::ModelParams& after,
                            const std::set<int>& allowed_rows) {
  std::size_t bad = 0;
  for (std::size_t r = 0; r < before.embeddings.rows(); ++r) {
    if (allowed_rows.count(static_cast<int>(r))) continue;
    const auto a = before.embeddings.row(r);
    const auto b = after.embeddings.row(r);
    for (std::size_t c = 0; c < a.size(); ++c)
      bad += std::memcmp(&a[c], &b[c], sizeof(double)) != 0 ? 1 : 0;
  }
  auto cmp = [&bad](const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i)
      bad += std::memcmp(&x[i], &y[i], sizeof(double)) != 0 ? 1 : 0;
  };
  cmp(before.w1.data(), after.w1.data());
  cmp(before.b1, after.b1);
  cmp(before.w2.data(), after.w2.data());
  cmp(before.b2, after.b2);
  return bad;
}

Outcome mask_integrity(const rb::ExperimentConfig& cfg, const fs::path& dual_dir) {
  const rb::Model clean = rb::load_model(dual_dir / "clean_model.json");
  const rb::Model attacked = rb::load_model(dual_dir / "attacked_model.json");
  const auto file = rb::load_detector(dual_dir / "detector.json");
  const auto& dual = std::get<rb::DualRapDetector>(file.detector);
  const std::set<int> triggers = clean.require_ids(cfg.poison.trigger_words, "trigger");
  const std::set<int> rap = attacked.require_ids(cfg.rap.rap_words, "rap");
  const std::size_t sos = mask_violations(clean.params, attacked.params, triggers);
  const std::size_t rap_a = mask_violations(attacked.params, dual.model_a.model.params, rap);
  const std::size_t rap_b = mask_violations(attacked.params, dual.model_b.params, rap);
  return {sos == 0 && rap_a == 0 && rap_b == 0,
          "changed outside mask: train_sos=" + std::to_string(sos) +
              " construct_rap(decrease)=" + std::to_string(rap_a) +
              " construct_rap(increase)=" + std::to_string(rap_b)};
}

Outcome attack_efficacy(const rb::DetectionReport& base) {
  const double clean_acc = metric(base, "clean_model_accuracy");
  const double flip_excess =
      metric(base, "subset_flip_rate") - metric(base, "clean_model_subset_flip_rate");
  const bool pass = clean_acc >= kMinCleanAccuracy &&
                    std::abs(base.clean_accuracy - clean_acc) <= kMaxAccuracyLoss &&
                    base.asr >= kMinAsr && flip_excess <= kMaxSubsetFlipExcess;
  return {pass, "clean_acc=" + fmt("%.4f", clean_acc) + " (>= 0.95) attacked_acc=" +
                    fmt("%.4f", base.clean_accuracy) + " (within 0.02) asr=" + fmt("%.4f", base.asr) +
                    " (>= 0.90) subset_flip_excess=" + fmt("%.4f", flip_excess) + " (<= 0.10)"};
}

Outcome baseline_defense(const rb::DetectionReport& base) {
  return {base.frr <= kMaxBaselineFrr && base.far <= kMaxBaselineFar,
          "frr=" + fmt("%.4f", base.frr) + " (<= 0.08) far=" + fmt("%.4f", base.far) + " (<= 0.30)"};
}

Outcome evasion(const rb::DetectionReport& base, const rb::DetectionReport& adv) {
  const double clean_acc = metric(adv, "clean_model_accuracy");
  const bool pass = adv.far >= base.far + kMinFarIncrease && adv.frr <= kMaxAdversarialFrr &&
                    std::abs(adv.clean_accuracy - clean_acc) <= kMaxAccuracyLoss;
  return {pass, "far=" + fmt("%.4f", adv.far) + " (>= baseline " + fmt("%.4f", base.far) +
                    " + 0.30) frr=" + fmt("%.4f", adv.frr) + " (<= 0.08) acc=" +
                    fmt("%.4f", adv.clean_accuracy) + " vs clean " + fmt("%.4f", clean_acc) +
                    " (within 0.02)"};
}

Outcome gap_closure(const rb::DetectionReport& base, const rb::DetectionReport& adv) {
  const double g_base = metric(base, "drop_gap");
  const double g_adv = metric(adv, "drop_gap");
  return {g_adv < kMaxGapRatio * g_base,
          "gap_adversarial=" + fmt("%.4f", g_adv) + " (< 0.5 * gap_baseline " +
              fmt("%.4f", g_base) + ")"};
}

Outcome dual_recovery(const rb::DetectionReport& adv, const rb::DetectionReport& dual) {
  return {dual.far <= kMaxDualFarRatio * adv.far && dual.frr <= kMaxDualFrr,
          "dual_far=" + fmt("%.4f", dual.far) + " (<= 0.5 * single " + fmt("%.4f", adv.far) +
              ") dual_frr=" + fmt("%.4f", dual.frr) + " (<= 0.12)"};
}

Outcome determinism(const rb::ExperimentConfig& cfg) {
  const char* files[] = {"clean_model.json", "attacked_model.json", "detector.json"};
  std::vector<std::string> first;
  rb::run_pipeline(cfg, rb::PipelineMode::kBaseline);
  first.push_back(rb::report_to_json(rb::read_report(cfg.out_dir / "report.json"), false).dump());
  for (const char* f : files) first.push_back(slurp(cfg.out_dir / f));
  rb::run_pipeline(cfg, rb::PipelineMode::kBaseline);
  std::vector<std::string> second;
  second.push_back(rb::report_to_json(rb::read_report(cfg.out_dir / "report.json"), false).dump());
  for (const char* f : files) second.push_back(slurp(cfg.out_dir / f));
  std::string differing;
  const char* names[] = {"report", "clean_model", "attacked_model", "detector"};
  for (std::size_t i = 0; i < first.size(); ++i)
    if (first[i] != second[i]) differing += std::string(differing.empty() ? "" : ",") + names[i];
  return {differing.empty(), differing.empty() ? "report (timestamp excluded) and model files identical"
                                               : "differs: " + differing};
}

Outcome detector_math() {
  bool ok = rb::frr_from_counts(50, 2) == 0.04 && rb::far_from_counts(200, 33) == 0.165;
  rb::LabeledDataset clean, poisoned;
  for (int i = 0; i < 50; ++i) clean.samples.push_back({{i < 2 ? "p" : "c"}, rb::kPositive, {}});
  for (int i = 0; i < 200; ++i)
    poisoned.samples.push_back({{i < 33 ? "c" : "p"}, rb::kPositive, rb::Provenance::kPoisoned});
  const rb::VerdictFn stub = [](const rb::Tokens& t) {
    rb::Verdict v;
    v.kind = t[0] == "p" ? rb::VerdictKind::kPoisoned : rb::VerdictKind::kClean;
    return v;
  };
  const double frr = rb::compute_frr(stub, clean).rate;
  const double far = rb::compute_far(stub, poisoned).rate;
  ok = ok && frr == 0.04 && far == 0.165;
  return {ok, "frr(2/50)=" + fmt("%.17g", frr) + " far(33/200)=" + fmt("%.17g", far)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rapbench acceptance run"};
  std::uint64_t seed = 1;
  std::string work = (fs::temp_directory_path() / "rapbench-acceptance").string();
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--work", work, "Scratch directory for pipeline artifacts");
  CLI11_PARSE(app, argc, argv);

  rb::ExperimentConfig cfg;
  cfg.master_seed = seed;
  const fs::path root = work;

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
  rb::DetectionReport base, adv, dual;
  try {
    auto run = [&](rb::PipelineMode mode) {
      rb::ExperimentConfig c = cfg;
      c.out_dir = root / std::string(rb::pipeline_mode_name(mode));
      return rb::run_pipeline(c, mode);
    };
    base = run(rb::PipelineMode::kBaseline);
    adv = run(rb::PipelineMode::kAdversarial);
    dual = run(rb::PipelineMode::kDualDefense);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: pipeline error: %s\n", e.what());
    return 2;
  }

  criteria.emplace_back("gradient correctness", [&] { return gradient_check(cfg); });
  criteria.emplace_back("mask integrity",
                        [&] { return mask_integrity(cfg, root / "dual-defense"); });
  criteria.emplace_back("attack efficacy", [&] { return attack_efficacy(base); });
  criteria.emplace_back("defense works on baseline", [&] { return baseline_defense(base); });
  criteria.emplace_back("evasion works", [&] { return evasion(base, adv); });
  criteria.emplace_back("robustness-gap closure", [&] { return gap_closure(base, adv); });
  criteria.emplace_back("dual defense recovers", [&] { return dual_recovery(adv, dual); });
  criteria.emplace_back("determinism", [&] {
    rb::ExperimentConfig c = cfg;
    c.out_dir = root / "determinism";
    return determinism(c);
  });
  criteria.emplace_back("detector math", [] { return detector_math(); });

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s | %s\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.c_str());
  }
  std::printf("acceptance seed=%llu: %d of %zu criteria failed\n",
              static_cast<unsigned long long>(seed), failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
