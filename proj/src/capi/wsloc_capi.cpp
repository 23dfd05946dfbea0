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

#include "wsloc/c_api.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "wsloc/config.hpp"
#include "wsloc/pipeline.hpp"
#include "wsloc/train.hpp"

struct wsloc_config {
  wsloc::exp::ExperimentConfig config;
};

struct wsloc_dataset {
  std::shared_ptr<const wsloc::collect::ConstraintGraph> graph;
};

struct wsloc_model {
  wsloc::net::MlpModel model;
};

namespace {

thread_local std::string g_last_error;

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
wsloc_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return WSLOC_OK;
  } catch (const wsloc::Error& e) {
    g_last_error = e.what();
    return static_cast<wsloc_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return WSLOC_INTERNAL;
}

void Require(bool ok, const char* what) {
  if (!ok) wsloc::Fail(wsloc::ErrorCode::kInvalidArgument, what);
}

using Command = std::string (*)(const wsloc::exp::ExperimentConfig&,
                                const std::string&, const wsloc::pipeline::Logger&);

wsloc_status RunCommand(Command cmd, const wsloc_config* config, const char* out_dir,
                        wsloc_log_fn log, void* user_data, char** out_manifest) {
  return Guard([&] {
    Require(config != nullptr && out_dir != nullptr, "config and out_dir are required");
    wsloc::pipeline::Logger logger;
    if (log != nullptr) {
      logger = [log, user_data](const std::string& line) { log(line.c_str(), user_data); };
    }
    const std::string manifest = cmd(config->config, out_dir, logger);
    if (out_manifest != nullptr) *out_manifest = Dup(manifest);
  });
}

}  // namespace

extern "C" {

const char* wsloc_version(void) { return "0.1.0"; }

const char* wsloc_status_name(wsloc_status status) {
  if (status == WSLOC_OK) return "Ok";
  static thread_local std::string name;
  name = std::string(wsloc::ErrorCodeName(static_cast<wsloc::ErrorCode>(status)));
  return name.c_str();
}

const char* wsloc_last_error(void) { return g_last_error.c_str(); }

void wsloc_string_free(char* text) { std::free(text); }

wsloc_status wsloc_preset_names(char** out_json) {
  return Guard([&] {
    Require(out_json != nullptr, "out_json is required");
    std::string s = "[";
    const auto& names = wsloc::exp::PresetNames();
    for (std::size_t i = 0; i < names.size(); ++i) {
      s += (i ? ",\"" : "\"") + names[i] + "\"";
    }
    *out_json = Dup(s + "]");
  });
}

wsloc_status wsloc_preset_json(const char* name, char** out_json) {
  return Guard([&] {
    Require(name != nullptr && out_json != nullptr, "name and out_json are required");
    *out_json = Dup(wsloc::exp::PresetJson(name));
  });
}

wsloc_status wsloc_config_resolve(const char* preset, const char* config_json,
                                  const char* const* seed_overrides,
                                  size_t override_count, wsloc_config** out_config) {
  return Guard([&] {
    Require(out_config != nullptr, "out_config is required");
    Require(override_count == 0 || seed_overrides != nullptr,
            "seed_overrides is NULL but override_count is nonzero");
    std::vector<std::string> overrides;
    for (size_t i = 0; i < override_count; ++i) {
      Require(seed_overrides[i] != nullptr, "NULL seed override");
      overrides.emplace_back(seed_overrides[i]);
    }
    auto* handle = new wsloc_config{wsloc::exp::ResolveConfig(
        preset ? preset : "", config_json ? config_json : "", overrides)};
    *out_config = handle;
  });
}

wsloc_status wsloc_config_to_json(const wsloc_config* config, char** out_json) {
  return Guard([&] {
    Require(config != nullptr && out_json != nullptr, "config and out_json are required");
    *out_json = Dup(wsloc::exp::ConfigToJson(config->config));
  });
}

void wsloc_config_free(wsloc_config* config) { delete config; }

wsloc_status wsloc_cmd_collect(const wsloc_config* config, const char* out_dir,
                               wsloc_log_fn log, void* user_data, char** out_manifest) {
  return RunCommand(&wsloc::pipeline::CmdCollect, config, out_dir, log, user_data,
                    out_manifest);
}

wsloc_status wsloc_cmd_train(const wsloc_config* config, const char* out_dir,
                             wsloc_log_fn log, void* user_data, char** out_manifest) {
  return RunCommand(&wsloc::pipeline::CmdTrain, config, out_dir, log, user_data,
                    out_manifest);
}

wsloc_status wsloc_cmd_eval(const wsloc_config* config, const char* out_dir,
                            wsloc_log_fn log, void* user_data, char** out_manifest) {
  return RunCommand(&wsloc::pipeline::CmdEval, config, out_dir, log, user_data,
                    out_manifest);
}

wsloc_status wsloc_cmd_sweep(const wsloc_config* config, const char* out_dir,
                             wsloc_log_fn log, void* user_data, char** out_manifest) {
  return RunCommand(&wsloc::pipeline::CmdSweep, config, out_dir, log, user_data,
                    out_manifest);
}

wsloc_status wsloc_dataset_load(const char* path, wsloc_dataset** out_dataset) {
  return Guard([&] {
    Require(path != nullptr && out_dataset != nullptr, "path and out_dataset are required");
    auto graph = std::make_shared<const wsloc::collect::ConstraintGraph>(
        wsloc::collect::LoadDataset(path));
    *out_dataset = new wsloc_dataset{std::move(graph)};
  });
}

size_t wsloc_dataset_size(const wsloc_dataset* dataset) {
  return dataset ? dataset->graph->size() : 0;
}

size_t wsloc_dataset_segment_count(const wsloc_dataset* dataset) {
  return dataset ? dataset->graph->segments().size() : 0;
}

int wsloc_dataset_input_dim(const wsloc_dataset* dataset) {
  return dataset ? dataset->graph->InputDim() : 0;
}

wsloc_status wsloc_dataset_observation(const wsloc_dataset* dataset, size_t index,
                                       double* out_values) {
  return Guard([&] {
    Require(dataset != nullptr && out_values != nullptr,
            "dataset and out_values are required");
    if (index >= dataset->graph->size()) {
      wsloc::Fail(wsloc::ErrorCode::kOutOfBounds, "observation index out of range");
    }
    const Eigen::VectorXd& v = dataset->graph->observations()[index].values;
    std::memcpy(out_values, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
  });
}

void wsloc_dataset_free(wsloc_dataset* dataset) { delete dataset; }

wsloc_status wsloc_model_load(const char* checkpoint_path, wsloc_model** out_model) {
  return Guard([&] {
    Require(checkpoint_path != nullptr && out_model != nullptr,
            "checkpoint_path and out_model are required");
    *out_model = new wsloc_model{wsloc::net::LoadCheckpoint(checkpoint_path).model};
  });
}

int wsloc_model_input_dim(const wsloc_model* model) {
  return model ? model->model.input_dim() : 0;
}

size_t wsloc_model_parameter_count(const wsloc_model* model) {
  return model ? model->model.ParameterCount() : 0;
}

wsloc_status wsloc_model_predict(const wsloc_model* model, const double* inputs,
                                 size_t count, double* out_xy) {
  return Guard([&] {
    Require(model != nullptr && (count == 0 || (inputs != nullptr && out_xy != nullptr)),
            "model, inputs and out_xy are required");
    if (count == 0) return;
    const Eigen::Map<const Eigen::MatrixXd> x(inputs, model->model.input_dim(),
                                              static_cast<Eigen::Index>(count));
    const wsloc::Points2 p = wsloc::train::Predict(model->model, x);
    std::memcpy(out_xy, p.data(), sizeof(double) * 2 * count);
  });
}

void wsloc_model_free(wsloc_model* model) { delete model; }

}  // extern "C"
