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

// rapbench command-line driver. Talks to the library only through rapbench.h.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rapbench/rapbench.h"

namespace {

constexpr int kUsageExit = 64;

// Carries a status out of a subcommand to the single error line in main().
struct CommandError {
  rb_status status;
  std::string message;
};

void check(rb_status s) {
  if (s != RB_OK) throw CommandError{s, rb_last_error()};
}

[[noreturn]] void fail(rb_status s, std::string message) { throw CommandError{s, std::move(message)}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Config = std::unique_ptr<rb_config, Deleter<rb_config, rb_config_free>>;
using Dataset = std::unique_ptr<rb_dataset, Deleter<rb_dataset, rb_dataset_free>>;
using ModelPtr = std::unique_ptr<rb_model, Deleter<rb_model, rb_model_free>>;
using Detector = std::unique_ptr<rb_detector, Deleter<rb_detector, rb_detector_free>>;
using Report = std::unique_ptr<rb_report, Deleter<rb_report, rb_report_free>>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  rb_string_free(s);
  return out;
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

Config load_config(const Globals& g) {
  rb_config* raw = nullptr;
  if (g.config_path.empty()) check(rb_config_default(&raw));
  else check(rb_config_load(g.config_path.c_str(), &raw));
  Config cfg(raw);
  if (g.seed) check(rb_config_set_seed(cfg.get(), *g.seed));
  if (!g.out_dir.empty()) check(rb_config_set_out_dir(cfg.get(), g.out_dir.c_str()));
  return cfg;
}

nlohmann::json config_json(const rb_config* cfg) {
  char* text = nullptr;
  check(rb_config_to_json(cfg, &text));
  return nlohmann::json::parse(take_string(text));
}

std::filesystem::path out_dir(const rb_config* cfg) {
  char* text = nullptr;
  check(rb_config_out_dir(cfg, &text));
  return take_string(text);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(RB_IO, "cannot create directory " + dir.string() + ": " + ec.message());
}

// Resolves an optional path argument against the output directory.
std::string resolve(const std::string& given, const rb_config* cfg, const char* fallback) {
  return given.empty() ? (out_dir(cfg) / fallback).string() : given;
}

std::string output_path(const std::string& given, const rb_config* cfg, const char* fallback) {
  const std::filesystem::path p = resolve(given, cfg, fallback);
  if (p.has_parent_path()) ensure_dir(p.parent_path());
  return p.string();
}

Dataset load_dataset(const std::string& path) {
  rb_dataset* raw = nullptr;
  check(rb_dataset_load(path.c_str(), &raw));
  return Dataset(raw);
}

ModelPtr load_model(const std::string& path) {
  rb_model* raw = nullptr;
  check(rb_model_load(path.c_str(), &raw));
  return ModelPtr(raw);
}

Detector load_detector(const std::string& path) {
  rb_detector* raw = nullptr;
  check(rb_detector_load(path.c_str(), &raw));
  return Detector(raw);
}

double report_value(const rb_report* r, const char* key) {
  double v = 0.0;
  check(rb_report_get(r, key, &v));
  return v;
}

void print_report(const rb_report* r, const std::string& path) {
  std::printf("frr=%.6f far=%.6f asr=%.6f clean_accuracy=%.6f report=%s\n", report_value(r, "frr"),
              report_value(r, "far"), report_value(r, "asr"), report_value(r, "clean_accuracy"),
              path.c_str());
}

const char* verdict_label(rb_verdict_kind k) {
  switch (k) {
    case RB_VERDICT_CLEAN: return "clean";
    case RB_VERDICT_POISONED: return "poisoned";
    case RB_VERDICT_NOT_APPLICABLE: return "not_applicable";
  }
  return "unknown";
}

// Quotes a message so that the error line stays a single parsable line.
std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out + "\"";
}

void report_error(const std::string& command, const char* code, const std::string& message) {
  std::fprintf(stderr, "error command=%s code=%s message=%s\n",
               command.empty() ? "-" : command.c_str(), code, quoted(message).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor attack and RAP detection benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(rb_version()));

  Globals g;
  app.add_option("--config", g.config_path, "JSON experiment config");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out_dir, "Output directory (overrides the config)");

  std::string command;

  auto* gen = app.add_subcommand("gen-corpus", "Generate and split the synthetic corpus");
  gen->callback([&] {
    Config cfg = load_config(g);
    rb_dataset *tr = nullptr, *dv = nullptr, *te = nullptr;
    check(rb_gen_corpus(cfg.get(), &tr, &dv, &te));
    Dataset train(tr), dev(dv), test(te);
    const auto dir = out_dir(cfg.get());
    ensure_dir(dir);
    check(rb_dataset_save(train.get(), (dir / "train.tsv").c_str()));
    check(rb_dataset_save(dev.get(), (dir / "dev.tsv").c_str()));
    check(rb_dataset_save(test.get(), (dir / "test.tsv").c_str()));
    std::printf("train=%zu dev=%zu test=%zu dir=%s\n", rb_dataset_size(train.get()),
                rb_dataset_size(dev.get()), rb_dataset_size(test.get()), dir.c_str());
  });

  std::string poison_input, poison_kind = "poisoned", poison_output;
  auto* poison = app.add_subcommand("poison", "Apply a poisoning construction to a TSV file");
  poison->add_option("--input", poison_input, "Source TSV")->required();
  poison->add_option("--kind", poison_kind, "poisoned | negative | adversarial | attack-set");
  poison->add_option("--output", poison_output, "Destination TSV (default <out>/<kind>.tsv)");
  poison->callback([&] {
    Config cfg = load_config(g);
    Dataset src = load_dataset(poison_input);
    rb_dataset* raw = nullptr;
    check(rb_poison(cfg.get(), src.get(), poison_kind.c_str(), &raw));
    Dataset out(raw);
    const std::string path = output_path(poison_output, cfg.get(), (poison_kind + ".tsv").c_str());
    check(rb_dataset_save(out.get(), path.c_str()));
    std::printf("samples=%zu output=%s\n", rb_dataset_size(out.get()), path.c_str());
  });

  std::string tc_train, tc_test, tc_output;
  auto* train_clean = app.add_subcommand("train-clean", "Train the clean classifier");
  train_clean->add_option("--train", tc_train, "Training TSV (default <out>/train.tsv)");
  train_clean->add_option("--test", tc_test, "Optional TSV to report accuracy on");
  train_clean->add_option("--output", tc_output, "Model file (default <out>/clean_model.json)");
  train_clean->callback([&] {
    Config cfg = load_config(g);
    Dataset train = load_dataset(resolve(tc_train, cfg.get(), "train.tsv"));
    rb_model* raw = nullptr;
    check(rb_train_clean(cfg.get(), train.get(), &raw));
    ModelPtr model(raw);
    const std::string path = output_path(tc_output, cfg.get(), "clean_model.json");
    check(rb_model_save(model.get(), path.c_str()));
    if (!tc_test.empty()) {
      Dataset test = load_dataset(tc_test);
      double acc = 0.0;
      check(rb_model_accuracy(model.get(), test.get(), &acc));
      std::printf("accuracy=%.6f ", acc);
    }
    std::printf("model=%s\n", path.c_str());
  });

  std::string at_model, at_train, at_output, at_set;
  bool at_adversarial = false;
  auto* attack = app.add_subcommand("attack", "Backdoor a clean model with trigger-word poisoning");
  attack->add_option("--model", at_model, "Clean model (default <out>/clean_model.json)");
  attack->add_option("--train", at_train, "Training TSV (default <out>/train.tsv)");
  attack->add_flag("--adversarial", at_adversarial, "Add perturbation-word adversarial samples");
  attack->add_option("--output", at_output, "Model file (default <out>/attacked_model.json)");
  attack->add_option("--attack-set", at_set, "Attack set TSV (default <out>/attack_set.tsv)");
  attack->callback([&] {
    Config cfg = load_config(g);
    ModelPtr clean = load_model(resolve(at_model, cfg.get(), "clean_model.json"));
    Dataset train = load_dataset(resolve(at_train, cfg.get(), "train.tsv"));
    rb_dataset* set_raw = nullptr;
    rb_model* raw = nullptr;
    check(rb_attack(cfg.get(), clean.get(), train.get(), at_adversarial ? 1 : 0, &set_raw, &raw));
    Dataset set(set_raw);
    ModelPtr model(raw);
    const std::string set_path = output_path(at_set, cfg.get(), "attack_set.tsv");
    const std::string path = output_path(at_output, cfg.get(), "attacked_model.json");
    check(rb_dataset_save(set.get(), set_path.c_str()));
    check(rb_model_save(model.get(), path.c_str()));
    std::printf("attack_samples=%zu model=%s\n", rb_dataset_size(set.get()), path.c_str());
  });

  std::string df_model, df_dev, df_output;
  auto add_defend = [&](const char* name, const char* help, bool dual) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--model", df_model, "Model to protect (default <out>/attacked_model.json)");
    sub->add_option("--dev", df_dev, "Defender's clean data (default <out>/dev.tsv)");
    sub->add_option("--output", df_output, "Detector file (default <out>/detector.json)");
    sub->callback([&, dual] {
      Config cfg = load_config(g);
      ModelPtr model = load_model(resolve(df_model, cfg.get(), "attacked_model.json"));
      Dataset dev = load_dataset(resolve(df_dev, cfg.get(), "dev.tsv"));
      rb_detector* raw = nullptr;
      check(dual ? rb_defend_dual(cfg.get(), model.get(), dev.get(), &raw)
                 : rb_defend(cfg.get(), model.get(), dev.get(), &raw));
      Detector det(raw);
      const std::string path = output_path(df_output, cfg.get(), "detector.json");
      check(rb_detector_save(det.get(), path.c_str()));
      std::printf("threshold=%.6f detector=%s\n", rb_detector_threshold(det.get()), path.c_str());
    });
  };
  add_defend("defend", "Construct and calibrate a RAP drop detector", false);
  add_defend("defend-dual", "Construct the dual (drop + increase) RAP detector", true);

  std::string cal_detector, cal_data, cal_output;
  std::optional<double> cal_frr;
  auto* calibrate = app.add_subcommand("calibrate", "Recompute a detector's threshold");
  calibrate->add_option("--detector", cal_detector, "Detector file (default <out>/detector.json)");
  calibrate->add_option("--data", cal_data, "Clean calibration TSV")->required();
  calibrate->add_option("--target-frr", cal_frr, "Target FRR (default from the config)");
  calibrate->add_option("--output", cal_output, "Destination (default: overwrite the detector)");
  calibrate->callback([&] {
    Config cfg = load_config(g);
    const std::string det_path = resolve(cal_detector, cfg.get(), "detector.json");
    Detector det = load_detector(det_path);
    Dataset data = load_dataset(cal_data);
    const double frr = cal_frr ? *cal_frr : config_json(cfg.get())["rap"]["target_frr"].get<double>();
    check(rb_calibrate(det.get(), data.get(), frr));
    const std::string path = cal_output.empty() ? det_path : output_path(cal_output, cfg.get(), "");
    check(rb_detector_save(det.get(), path.c_str()));
    std::printf("threshold=%.6f detector=%s\n", rb_detector_threshold(det.get()), path.c_str());
  });

  std::string dt_detector, dt_input;
  auto* detect = app.add_subcommand("detect", "Classify each sample of a TSV as clean or poisoned");
  detect->add_option("--detector", dt_detector, "Detector file (default <out>/detector.json)");
  detect->add_option("--input", dt_input, "TSV to screen")->required();
  detect->callback([&] {
    Config cfg = load_config(g);
    Detector det = load_detector(resolve(dt_detector, cfg.get(), "detector.json"));
    Dataset data = load_dataset(dt_input);
    const std::size_t n = rb_dataset_size(data.get());
    if (n == 0) fail(RB_INVALID_ARGUMENT, dt_input + ": no samples");
    std::size_t applicable = 0, flagged = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const char* text = nullptr;
      check(rb_dataset_sample(data.get(), i, &text, nullptr));
      rb_verdict v{};
      check(rb_detect(det.get(), text, &v));
      if (v.kind != RB_VERDICT_NOT_APPLICABLE) ++applicable;
      if (v.kind == RB_VERDICT_POISONED) ++flagged;
      std::printf("%zu\t%s\t%.6f", i, verdict_label(v.kind), v.drop);
      if (v.has_gain) std::printf("\tgain=%.6f", v.gain);
      std::printf("\n");
    }
    std::printf("evaluated=%zu applicable=%zu flagged=%zu\n", n, applicable, flagged);
  });

  std::string ev_model, ev_detector, ev_clean, ev_poisoned, ev_output;
  auto* evaluate = app.add_subcommand("evaluate", "Measure FRR, FAR, ASR and clean accuracy");
  evaluate->add_option("--model", ev_model, "Deployed model (default <out>/attacked_model.json)");
  evaluate->add_option("--detector", ev_detector, "Detector file (default <out>/detector.json)");
  evaluate->add_option("--clean", ev_clean, "Clean test TSV (default <out>/test.tsv)");
  evaluate->add_option("--poisoned", ev_poisoned, "Poisoned test TSV (default <out>/poisoned.tsv)");
  evaluate->add_option("--output", ev_output, "Report file (default <out>/report.json)");
  evaluate->callback([&] {
    Config cfg = load_config(g);
    ModelPtr model = load_model(resolve(ev_model, cfg.get(), "attacked_model.json"));
    Detector det = load_detector(resolve(ev_detector, cfg.get(), "detector.json"));
    Dataset clean = load_dataset(resolve(ev_clean, cfg.get(), "test.tsv"));
    Dataset poisoned = load_dataset(resolve(ev_poisoned, cfg.get(), "poisoned.tsv"));
    rb_report* raw = nullptr;
    check(rb_evaluate(det.get(), model.get(), clean.get(), poisoned.get(), &raw));
    Report report(raw);
    const std::string path = output_path(ev_output, cfg.get(), "report.json");
    check(rb_report_save(report.get(), path.c_str()));
    print_report(report.get(), path);
  });

  std::string pl_mode = "baseline";
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  pipeline->add_option("--mode", pl_mode, "baseline | adversarial | dual-defense");
  pipeline->callback([&] {
    Config cfg = load_config(g);
    rb_report* raw = nullptr;
    check(rb_pipeline(cfg.get(), pl_mode.c_str(), &raw));
    Report report(raw);
    print_report(report.get(), (out_dir(cfg.get()) / "report.json").string());
  });

  for (auto* sub : app.get_subcommands({}))
    sub->preparse_callback([&command, sub](std::size_t) { command = sub->get_name(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(command, "USAGE", e.what());
    return kUsageExit;
  } catch (const CommandError& e) {
    report_error(command, rb_status_name(e.status), e.message);
    return static_cast<int>(e.status);
  } catch (const std::exception& e) {
    report_error(command, rb_status_name(RB_INTERNAL), e.what());
    return static_cast<int>(RB_INTERNAL);
  }
  return EXIT_SUCCESS;
}
