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

// C interface to rapbench. All objects are opaque handles owned by the
// caller and released with the matching *_free function. Every call that can
// fail returns an rb_status; the message of the most recent failure on the
// calling thread is available from rb_last_error().

#ifndef RAPBENCH_RAPBENCH_H_
#define RAPBENCH_RAPBENCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(RAPBENCH_BUILDING_LIBRARY)
#define RB_API __attribute__((visibility("default")))
#else
#define RB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rb_status {
  RB_OK = 0,
  RB_INVALID_ARGUMENT = 1,
  RB_OUT_OF_RANGE = 2,
  RB_IO = 3,
  RB_PARSE = 4,
  RB_FORMAT = 5,
  RB_FAILED_PRECONDITION = 6,
  RB_INTERNAL = 7,
} rb_status;

typedef enum rb_verdict_kind {
  RB_VERDICT_CLEAN = 0,
  RB_VERDICT_POISONED = 1,
  RB_VERDICT_NOT_APPLICABLE = 2,
} rb_verdict_kind;

typedef struct rb_verdict {
  rb_verdict_kind kind;
  double drop;  /* NaN when not applicable */
  int has_gain; /* nonzero when the increase model was consulted */
  double gain;
} rb_verdict;

typedef struct rb_config rb_config;
typedef struct rb_dataset rb_dataset;
typedef struct rb_model rb_model;
typedef struct rb_detector rb_detector;
typedef struct rb_report rb_report;

RB_API const char* rb_version(void);
RB_API const char* rb_status_name(rb_status status);
/* Message of the last failed call on this thread; "" if none. */
RB_API const char* rb_last_error(void);
RB_API void rb_string_free(char* str);

/* Configuration */
RB_API rb_status rb_config_default(rb_config** out);
RB_API rb_status rb_config_load(const char* path, rb_config** out);
RB_API rb_status rb_config_parse(const char* json_text, rb_config** out);
RB_API rb_status rb_config_set_seed(rb_config* cfg, uint64_t seed);
RB_API rb_status rb_config_set_out_dir(rb_config* cfg, const char* dir);
RB_API rb_status rb_config_out_dir(const rb_config* cfg, char** out);
RB_API rb_status rb_config_to_json(const rb_config* cfg, char** out);
RB_API void rb_config_free(rb_config* cfg);

/* Datasets */
RB_API rb_status rb_dataset_load(const char* path, rb_dataset** out);
RB_API rb_status rb_dataset_save(const rb_dataset* ds, const char* path);
RB_API size_t rb_dataset_size(const rb_dataset* ds);
RB_API size_t rb_dataset_count_label(const rb_dataset* ds, int label);
/* *text stays valid until the dataset is freed. */
RB_API rb_status rb_dataset_sample(const rb_dataset* ds, size_t index, const char** text,
                                   int* label);
RB_API void rb_dataset_free(rb_dataset* ds);

/* Generates the synthetic corpus (or loads the configured TSVs) and splits it. */
RB_API rb_status rb_gen_corpus(const rb_config* cfg, rb_dataset** train, rb_dataset** dev,
                               rb_dataset** test);
/* kind: "poisoned", "negative", "adversarial" or "attack-set". */
RB_API rb_status rb_poison(const rb_config* cfg, const rb_dataset* source, const char* kind,
                           rb_dataset** out);

/* Models */
RB_API rb_status rb_model_load(const char* path, rb_model** out);
RB_API rb_status rb_model_save(const rb_model* model, const char* path);
RB_API rb_status rb_model_predict(const rb_model* model, const char* text, int* label,
                                  double* p_positive);
RB_API rb_status rb_model_accuracy(const rb_model* model, const rb_dataset* ds, double* out);
RB_API void rb_model_free(rb_model* model);

RB_API rb_status rb_train_clean(const rb_config* cfg, const rb_dataset* train, rb_model** out);
/* Builds the attack set from `train` and trains the trigger rows of `clean`.
   attack_set may be NULL. */
RB_API rb_status rb_attack(const rb_config* cfg, const rb_model* clean, const rb_dataset* train,
                           int include_adversarial, rb_dataset** attack_set, rb_model** out);

/* Detectors */
RB_API rb_status rb_defend(const rb_config* cfg, const rb_model* model, const rb_dataset* dev,
                           rb_detector** out);
RB_API rb_status rb_defend_dual(const rb_config* cfg, const rb_model* model,
                                const rb_dataset* dev, rb_detector** out);
/* Recomputes the drop threshold from clean samples. */
RB_API rb_status rb_calibrate(rb_detector* det, const rb_dataset* calib, double target_frr);
RB_API rb_status rb_detector_load(const char* path, rb_detector** out);
RB_API rb_status rb_detector_save(const rb_detector* det, const char* path);
RB_API int rb_detector_is_dual(const rb_detector* det);
RB_API double rb_detector_threshold(const rb_detector* det);
RB_API rb_status rb_detect(const rb_detector* det, const char* text, rb_verdict* out);
RB_API void rb_detector_free(rb_detector* det);

/* Reports */
RB_API rb_status rb_evaluate(const rb_detector* det, const rb_model* model,
                             const rb_dataset* clean_test, const rb_dataset* poisoned_test,
                             rb_report** out);
/* mode: "baseline", "adversarial" or "dual-defense". */
RB_API rb_status rb_pipeline(const rb_config* cfg, const char* mode, rb_report** out);
/* key: frr, far, asr, clean_accuracy, or any named metric. */
RB_API rb_status rb_report_get(const rb_report* report, const char* key, double* out);
RB_API rb_status rb_report_to_json(const rb_report* report, int include_timestamp, char** out);
RB_API rb_status rb_report_save(const rb_report* report, const char* path);
RB_API rb_status rb_report_load(const char* path, rb_report** out);
RB_API void rb_report_free(rb_report* report);

#ifdef __cplusplus
}
#endif

#endif  // RAPBENCH_RAPBENCH_H_
