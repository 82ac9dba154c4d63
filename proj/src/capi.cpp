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

#include "rapbench/rapbench.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <variant>

#include "json.hpp"
#include "rapbench/error.hpp"
#include "rapbench/experiment.hpp"

struct rb_config {
  rapbench::ExperimentConfig cfg;
};

struct rb_dataset {
  rapbench::LabeledDataset data;
  std::vector<std::string> texts;  // joined tokens, filled on first access
};

struct rb_model {
  rapbench::Model model;
};

struct rb_detector {
  rapbench::DetectorFile file;
};

struct rb_report {
  rapbench::DetectionReport report;
};

namespace {

using rapbench::ErrorCode;

thread_local std::string g_last_error;

rb_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return RB_INVALID_ARGUMENT;
    case ErrorCode::kOutOfRange: return RB_OUT_OF_RANGE;
    case ErrorCode::kIo: return RB_IO;
    case ErrorCode::kParse: return RB_PARSE;
    case ErrorCode::kFormat: return RB_FORMAT;
    case ErrorCode::kFailedPrecondition: return RB_FAILED_PRECONDITION;
  }
  return RB_INTERNAL;
}

template <typename F>
rb_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RB_OK;
  } catch (const rapbench::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RB_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RB_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RB_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) rapbench::Fail(ErrorCode::kInvalidArgument, std::string(name) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

rb_dataset* wrap(rapbench::LabeledDataset data) {
  return new rb_dataset{std::move(data), {}};
}

const rapbench::RapDetector& drop_detector(const rb_detector* det) {
  const auto& d = det->file.detector;
  if (const auto* single = std::get_if<rapbench::RapDetector>(&d)) return *single;
  return std::get<rapbench::DualRapDetector>(d).model_a;
}

rapbench::RapDetector& drop_detector(rb_detector* det) {
  auto& d = det->file.detector;
  if (auto* single = std::get_if<rapbench::RapDetector>(&d)) return *single;
  return std::get<rapbench::DualRapDetector>(d).model_a;
}

rapbench::VerdictFn verdict_of(const rb_detector* det) {
  return std::visit([](const auto& d) { return rapbench::verdict_fn(d); }, det->file.detector);
}

}  // namespace

extern "C" {

const char* rb_version(void) { return "0.1.0"; }

const char* rb_status_name(rb_status status) {
  switch (status) {
    case RB_OK: return "OK";
    case RB_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
    case RB_OUT_OF_RANGE: return "OUT_OF_RANGE";
    case RB_IO: return "IO";
    case RB_PARSE: return "PARSE";
    case RB_FORMAT: return "FORMAT";
    case RB_FAILED_PRECONDITION: return "FAILED_PRECONDITION";
    case RB_INTERNAL: return "INTERNAL";
  }
  return "UNKNOWN";
}

const char* rb_last_error(void) { return g_last_error.c_str(); }

void rb_string_free(char* str) { std::free(str); }

rb_status rb_config_default(rb_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new rb_config{};
  });
}

rb_status rb_config_load(const char* path, rb_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rb_config{rapbench::load_config(path)};
  });
}

rb_status rb_config_parse(const char* json_text, rb_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      rapbench::Fail(ErrorCode::kParse, std::string("config: ") + e.what());
    }
    *out = new rb_config{rapbench::config_from_json(doc)};
  });
}

rb_status rb_config_set_seed(rb_config* cfg, uint64_t seed) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.master_seed = seed;
  });
}

rb_status rb_config_set_out_dir(rb_config* cfg, const char* dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(dir, "dir");
    rapbench::Require(*dir != '\0', ErrorCode::kInvalidArgument, "output directory is empty");
    cfg->cfg.out_dir = dir;
  });
}

rb_status rb_config_out_dir(const rb_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(cfg->cfg.out_dir.string());
  });
}

rb_status rb_config_to_json(const rb_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(rapbench::config_to_json(cfg->cfg).dump(2));
  });
}

void rb_config_free(rb_config* cfg) { delete cfg; }

rb_status rb_dataset_load(const char* path, rb_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap(rapbench::load_tsv(path));
  });
}

rb_status rb_dataset_save(const rb_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "ds");
    need(path, "path");
    rapbench::save_tsv(ds->data, path);
  });
}

size_t rb_dataset_size(const rb_dataset* ds) { return ds ? ds->data.size() : 0; }

size_t rb_dataset_count_label(const rb_dataset* ds, int label) {
  return ds ? ds->data.count_label(label) : 0;
}

rb_status rb_dataset_sample(const rb_dataset* ds, size_t index, const char** text, int* label) {
  return guarded([&] {
    need(ds, "ds");
    rapbench::Require(index < ds->data.size(), ErrorCode::kOutOfRange,
                      "sample index " + std::to_string(index) + " out of range");
    auto& texts = const_cast<rb_dataset*>(ds)->texts;
    if (texts.size() != ds->data.size()) {
      texts.clear();
      texts.reserve(ds->data.size());
      for (const auto& s : ds->data.samples) texts.push_back(rapbench::join_tokens(s.tokens));
    }
    if (text) *text = texts[index].c_str();
    if (label) *label = ds->data.samples[index].label;
  });
}

void rb_dataset_free(rb_dataset* ds) { delete ds; }

rb_status rb_gen_corpus(const rb_config* cfg, rb_dataset** train, rb_dataset** dev,
                        rb_dataset** test) {
  return guarded([&] {
    need(cfg, "cfg");
    need(train, "train");
    need(dev, "dev");
    need(test, "test");
    cfg->cfg.validate();
    rapbench::CorpusSplits s = rapbench::make_corpus(cfg->cfg);
    *train = wrap(std::move(s.train));
    *dev = wrap(std::move(s.dev));
    *test = wrap(std::move(s.test));
  });
}

rb_status rb_poison(const rb_config* cfg, const rb_dataset* source, const char* kind,
                    rb_dataset** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(source, "source");
    need(kind, "kind");
    need(out, "out");
    const auto k = rapbench::parse_poison_kind(kind);
    *out = wrap(rapbench::stage_poison(cfg->cfg, source->data, k, std::string("poison-") + kind));
  });
}

rb_status rb_model_load(const char* path, rb_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rb_model{rapbench::load_model(path)};
  });
}

rb_status rb_model_save(const rb_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    rapbench::save_model(model->model, path);
  });
}

rb_status rb_model_predict(const rb_model* model, const char* text, int* label,
                           double* p_positive) {
  return guarded([&] {
    need(model, "model");
    need(text, "text");
    const auto tokens = rapbench::tokenize(text);
    if (label) *label = model->model.predict(tokens);
    if (p_positive) *p_positive = model->model.prob_of(tokens, rapbench::kPositive);
  });
}

rb_status rb_model_accuracy(const rb_model* model, const rb_dataset* ds, double* out) {
  return guarded([&] {
    need(model, "model");
    need(ds, "ds");
    need(out, "out");
    *out = rapbench::clean_accuracy(model->model, ds->data);
  });
}

void rb_model_free(rb_model* model) { delete model; }

rb_status rb_train_clean(const rb_config* cfg, const rb_dataset* train, rb_model** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(train, "train");
    need(out, "out");
    cfg->cfg.validate();
    *out = new rb_model{rapbench::stage_train_clean(cfg->cfg, train->data)};
  });
}

rb_status rb_attack(const rb_config* cfg, const rb_model* clean, const rb_dataset* train,
                    int include_adversarial, rb_dataset** attack_set, rb_model** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(clean, "clean");
    need(train, "train");
    need(out, "out");
    cfg->cfg.validate();
    const bool adv = include_adversarial != 0;
    rapbench::Require(!adv || !cfg->cfg.poison.perturbation_word.empty(),
                      ErrorCode::kInvalidArgument,
                      "adversarial training requires poison.perturbation_word");
    auto set = rapbench::stage_attack_set(cfg->cfg, train->data, adv);
    auto model = rapbench::stage_attack(cfg->cfg, clean->model, set, adv);
    *out = new rb_model{std::move(model)};
    if (attack_set) *attack_set = wrap(std::move(set));
  });
}

rb_status rb_defend(const rb_config* cfg, const rb_model* model, const rb_dataset* dev,
                    rb_detector** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(model, "model");
    need(dev, "dev");
    need(out, "out");
    cfg->cfg.validate();
    rapbench::DetectorFile file;
    file.detector = rapbench::stage_defend(cfg->cfg, model->model, dev->data);
    file.config_json = rapbench::config_to_json(cfg->cfg).dump();
    *out = new rb_detector{std::move(file)};
  });
}

rb_status rb_defend_dual(const rb_config* cfg, const rb_model* model, const rb_dataset* dev,
                         rb_detector** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(model, "model");
    need(dev, "dev");
    need(out, "out");
    cfg->cfg.validate();
    rapbench::DetectorFile file;
    file.detector = rapbench::stage_defend_dual(cfg->cfg, model->model, dev->data);
    file.config_json = rapbench::config_to_json(cfg->cfg).dump();
    *out = new rb_detector{std::move(file)};
  });
}

rb_status rb_calibrate(rb_detector* det, const rb_dataset* calib, double target_frr) {
  return guarded([&] {
    need(det, "det");
    need(calib, "calib");
    rapbench::RapDetector& d = drop_detector(det);
    d.threshold = rapbench::calibrate_threshold(d.model, d.rap_words, d.protect_label, calib->data,
                                                target_frr);
  });
}

rb_status rb_detector_load(const char* path, rb_detector** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rb_detector{rapbench::load_detector(path)};
  });
}

rb_status rb_detector_save(const rb_detector* det, const char* path) {
  return guarded([&] {
    need(det, "det");
    need(path, "path");
    rapbench::save_detector(det->file, path);
  });
}

int rb_detector_is_dual(const rb_detector* det) {
  return det && std::holds_alternative<rapbench::DualRapDetector>(det->file.detector) ? 1 : 0;
}

double rb_detector_threshold(const rb_detector* det) {
  return det ? drop_detector(det).threshold : std::nan("");
}

rb_status rb_detect(const rb_detector* det, const char* text, rb_verdict* out) {
  return guarded([&] {
    need(det, "det");
    need(text, "text");
    need(out, "out");
    const rapbench::Verdict v = verdict_of(det)(rapbench::tokenize(text));
    out->kind = static_cast<rb_verdict_kind>(v.kind);
    out->drop = v.drop;
    out->has_gain = v.gain.has_value() ? 1 : 0;
    out->gain = v.gain.value_or(0.0);
  });
}

void rb_detector_free(rb_detector* det) { delete det; }

rb_status rb_evaluate(const rb_detector* det, const rb_model* model, const rb_dataset* clean_test,
                      const rb_dataset* poisoned_test, rb_report** out) {
  return guarded([&] {
    need(det, "det");
    need(model, "model");
    need(clean_test, "clean_test");
    need(poisoned_test, "poisoned_test");
    need(out, "out");
    const auto& d = drop_detector(det);
    auto report = rapbench::evaluate_detector(verdict_of(det), model->model, d.protect_label,
                                              clean_test->data, poisoned_test->data);
    nlohmann::json echo = nlohmann::json::parse(det->file.config_json, nullptr, false);
    if (echo.is_discarded() || !echo.is_object()) echo = nlohmann::json::object();
    echo["detector"] = rb_detector_is_dual(det) ? "dual" : "single";
    echo["threshold"] = d.threshold;
    report.config = std::move(echo);
    report.timestamp = rapbench::utc_timestamp();
    *out = new rb_report{std::move(report)};
  });
}

rb_status rb_pipeline(const rb_config* cfg, const char* mode, rb_report** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(mode, "mode");
    need(out, "out");
    const auto m = rapbench::parse_pipeline_mode(mode);
    *out = new rb_report{rapbench::run_pipeline(cfg->cfg, m)};
  });
}

rb_status rb_report_get(const rb_report* report, const char* key, double* out) {
  return guarded([&] {
    need(report, "report");
    need(key, "key");
    need(out, "out");
    const auto& r = report->report;
    const std::string k = key;
    if (k == "frr") *out = r.frr;
    else if (k == "far") *out = r.far;
    else if (k == "asr") *out = r.asr;
    else if (k == "clean_accuracy") *out = r.clean_accuracy;
    else {
      const auto it = r.metrics.find(k);
      rapbench::Require(it != r.metrics.end(), ErrorCode::kOutOfRange,
                        "report has no metric '" + k + "'");
      *out = it->second;
    }
  });
}

rb_status rb_report_to_json(const rb_report* report, int include_timestamp, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(rapbench::report_to_json(report->report, include_timestamp != 0).dump(2));
  });
}

rb_status rb_report_save(const rb_report* report, const char* path) {
  return guarded([&] {
    need(report, "report");
    need(path, "path");
    rapbench::write_report(report->report, path);
  });
}

rb_status rb_report_load(const char* path, rb_report** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rb_report{rapbench::read_report(path)};
  });
}

void rb_report_free(rb_report* report) { delete report; }

}  // extern "C"
