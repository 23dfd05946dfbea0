/*
 * Copyright 2026 The wsloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef WSLOC_C_API_H_
#define WSLOC_C_API_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(WSLOC_BUILDING_LIBRARY)
#define WSLOC_API __declspec(dllexport)
#else
#define WSLOC_API __declspec(dllimport)
#endif
#else
#define WSLOC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wsloc_status {
  WSLOC_OK = 0,
  WSLOC_INVALID_ARGUMENT = 1,
  WSLOC_INVALID_CONFIG = 2,
  WSLOC_IO = 3,
  WSLOC_SCHEMA_MISMATCH = 4,
  WSLOC_OUT_OF_BOUNDS = 10,
  WSLOC_ORIGIN_OCCUPIED = 11,
  WSLOC_NON_UNIT_DIRECTION = 12,
  WSLOC_DISCONNECTED_FREE_SPACE = 13,
  WSLOC_RETRY_EXHAUSTED = 20,
  WSLOC_STUCK = 21,
  WSLOC_NO_LANDMARKS = 22,
  WSLOC_DIMENSION_MISMATCH = 30,
  WSLOC_STALE_CACHE = 31,
  WSLOC_SHAPE_MISMATCH = 40,
  WSLOC_EMPTY_PAIR_SET = 41,
  WSLOC_BATCH_TOO_SMALL = 42,
  WSLOC_SINGULAR_NORMAL_EQUATIONS = 50,
  WSLOC_DEGENERATE_GEOMETRY = 51,
  WSLOC_EMPTY_TRAINING_SET = 52,
  WSLOC_DEGENERATE_CLOUD = 60,
  WSLOC_LENGTH_MISMATCH = 61,
  WSLOC_SAMPLE_BUDGET_EXCEEDED = 62,
  WSLOC_NON_FINITE_LOSS = 70,
  WSLOC_INTERNAL = 99
} wsloc_status;

/* Opaque handles. */
typedef struct wsloc_config wsloc_config;
typedef struct wsloc_dataset wsloc_dataset;
typedef struct wsloc_model wsloc_model;

/* Progress sink; `line` is valid only during the call. */
typedef void (*wsloc_log_fn)(const char* line, void* user_data);

WSLOC_API const char* wsloc_version(void);
/* Stable name such as "InvalidConfig"; "Unknown" for other values. */
WSLOC_API const char* wsloc_status_name(wsloc_status status);
/* Message of the last failure on the calling thread; empty after success. */
WSLOC_API const char* wsloc_last_error(void);
/* Releases strings returned through char** out-parameters. */
WSLOC_API void wsloc_string_free(char* text);

/* JSON array of preset names. */
WSLOC_API wsloc_status wsloc_preset_names(char** out_json);
WSLOC_API wsloc_status wsloc_preset_json(const char* name, char** out_json);

/* Preset (may be NULL or empty), then the JSON document `config_json`
 * (may be NULL) merged on top, then "name=value" seed overrides. */
WSLOC_API wsloc_status wsloc_config_resolve(const char* preset,
                                            const char* config_json,
                                            const char* const* seed_overrides,
                                            size_t override_count,
                                            wsloc_config** out_config);
WSLOC_API wsloc_status wsloc_config_to_json(const wsloc_config* config,
                                            char** out_json);
WSLOC_API void wsloc_config_free(wsloc_config* config);

/* Commands write their artifacts into `out_dir` and return the manifest. */
WSLOC_API wsloc_status wsloc_cmd_collect(const wsloc_config* config,
                                         const char* out_dir, wsloc_log_fn log,
                                         void* user_data, char** out_manifest);
WSLOC_API wsloc_status wsloc_cmd_train(const wsloc_config* config,
                                       const char* out_dir, wsloc_log_fn log,
                                       void* user_data, char** out_manifest);
WSLOC_API wsloc_status wsloc_cmd_eval(const wsloc_config* config,
                                      const char* out_dir, wsloc_log_fn log,
                                      void* user_data, char** out_manifest);
WSLOC_API wsloc_status wsloc_cmd_sweep(const wsloc_config* config,
                                       const char* out_dir, wsloc_log_fn log,
                                       void* user_data, char** out_manifest);

WSLOC_API wsloc_status wsloc_dataset_load(const char* path,
                                          wsloc_dataset** out_dataset);
WSLOC_API size_t wsloc_dataset_size(const wsloc_dataset* dataset);
WSLOC_API size_t wsloc_dataset_segment_count(const wsloc_dataset* dataset);
WSLOC_API int wsloc_dataset_input_dim(const wsloc_dataset* dataset);
/* Copies observation `index` into `out_values` (input_dim doubles). */
WSLOC_API wsloc_status wsloc_dataset_observation(const wsloc_dataset* dataset,
                                                 size_t index,
                                                 double* out_values);
WSLOC_API void wsloc_dataset_free(wsloc_dataset* dataset);

WSLOC_API wsloc_status wsloc_model_load(const char* checkpoint_path,
                                        wsloc_model** out_model);
WSLOC_API int wsloc_model_input_dim(const wsloc_model* model);
WSLOC_API size_t wsloc_model_parameter_count(const wsloc_model* model);
/* `inputs` holds `count` observations back to back; writes count (x, y)
 * pairs to `out_xy`. */
WSLOC_API wsloc_status wsloc_model_predict(const wsloc_model* model,
                                           const double* inputs, size_t count,
                                           double* out_xy);
WSLOC_API void wsloc_model_free(wsloc_model* model);

#ifdef __cplusplus
}
#endif

#endif /* WSLOC_C_API_H_ */
