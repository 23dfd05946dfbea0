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

#include "wsloc/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"

namespace wsloc::exp {
namespace {

using nlohmann::json;

constexpr int kConfigSchemaVersion = 1;

[[noreturn]] void Invalid(const std::string& field, const std::string& what) {
  Fail(ErrorCode::kInvalidConfig, field + ": " + what);
}

// Reads the keys of one JSON object and rejects any it did not consume.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Invalid(path_, "must be an object");
  }

  template <typename T>
  void Read(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      Invalid(Field(key), "has the wrong type");
    }
  }

  void ReadOptional(const std::string& key, std::optional<double>& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    if (v.is_null()) {
      out.reset();
    } else if (v.is_number()) {
      out = v.get<double>();
    } else {
      Invalid(Field(key), "must be a number or null");
    }
  }

  const json* Child(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  bool Has(const std::string& key) const { return j_.contains(key); }

  std::string Field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void Finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) Invalid(Field(item.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void Check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) Invalid(field, what);
}

ExperimentConfig ToyComplete() {
  ExperimentConfig c;
  c.name = "toy-complete";
  c.collection.segments = 0;
  c.collection.sample_budget = 14413;
  c.seeds = {11, 12, 13, 14, 15, 16, 17};
  return c;
}

ExperimentConfig PresetConfig(const std::string& name) {
  if (name == "toy-complete") return ToyComplete();
  if (name == "toy-incomplete") {
    ExperimentConfig c = ToyComplete();
    c.name = name;
    c.collection.d_max = 0.6;
    return c;
  }
  if (name == "endpoint") {
    ExperimentConfig c = ToyComplete();
    c.name = name;
    c.collection.strategy = "endpoint";
    c.collection.positions = 1570;
    return c;
  }
  if (name == "noise-sweep") {
    ExperimentConfig c = ToyComplete();
    c.name = name;
    c.sweep.kind = "noise";
    c.sweep.values = {0.0, 0.02, 0.04, 0.08, 0.10};
    return c;
  }
  if (name == "sample-sweep") {
    ExperimentConfig c = ToyComplete();
    c.name = name;
    c.sweep.kind = "samples";
    c.sweep.values = {1000, 2000, 5000, 10000, 0};
    return c;
  }
  if (name == "lidar-room") {
    ExperimentConfig c;
    c.name = name;
    c.environment.kind = "room";
    c.environment.room.rows = 64;
    c.environment.room.cols = 64;
    c.environment.room.cell_size = 0.1;
    c.environment.room.random_obstacles = 6;
    c.environment.room.obstacle_min_cells = 4;
    c.environment.room.obstacle_max_cells = 12;
    c.modality = "lidar";
    c.collection.strategy = "dense";
    c.collection.spacing = 0.1;
    c.collection.segments = 0;
    c.collection.sample_budget = 10000;
    c.collection.n_beams = 256;
    c.collection.max_range = 10.0;
    c.collection.orientations = 100;
    c.collection.orientation_samples = 5;
    c.layers = {512, 512, 512, 1024, 512, 512, 256, 256, 128, 2};
    c.training.epochs = 300;
    c.training.batch_size = 800;
    c.training.lr_schedule = {{0, 1e-3}, {200, 1e-4}};
    c.eval.grid_resolution = 64;
    c.eval.test_positions = 2000;
    c.seeds = {21, 22, 23, 24, 25, 26, 27};
    return c;
  }
  Fail(ErrorCode::kInvalidConfig, "preset: unknown preset '" + name + "'");
}

json BoundsJson(const env::Bounds& b) {
  return {{"xmin", b.xmin}, {"xmax", b.xmax}, {"ymin", b.ymin}, {"ymax", b.ymax}};
}

void ReadBounds(const json& j, const std::string& path, env::Bounds& b) {
  ObjectReader r(j, path);
  r.Read("xmin", b.xmin);
  r.Read("xmax", b.xmax);
  r.Read("ymin", b.ymin);
  r.Read("ymax", b.ymax);
  r.Finish();
}

void ReadRoom(const json& j, const std::string& path, env::RoomSpec& room) {
  ObjectReader r(j, path);
  r.Read("rows", room.rows);
  r.Read("cols", room.cols);
  r.Read("cell_size", room.cell_size);
  std::vector<double> origin{room.origin.x(), room.origin.y()};
  r.Read("origin", origin);
  Check(origin.size() == 2, r.Field("origin"), "must hold 2 numbers");
  room.origin = Vec2(origin[0], origin[1]);
  r.Read("wall_thickness", room.wall_thickness);
  if (const json* obs = r.Child("obstacles")) {
    Check(obs->is_array(), r.Field("obstacles"), "must be an array");
    room.obstacles.clear();
    for (std::size_t i = 0; i < obs->size(); ++i) {
      env::CellRect rect;
      ObjectReader o((*obs)[i], r.Field("obstacles") + "[" + std::to_string(i) + "]");
      o.Read("row0", rect.row0);
      o.Read("col0", rect.col0);
      o.Read("rows", rect.rows);
      o.Read("cols", rect.cols);
      o.Finish();
      room.obstacles.push_back(rect);
    }
  }
  r.Read("random_obstacles", room.random_obstacles);
  r.Read("obstacle_min_cells", room.obstacle_min_cells);
  r.Read("obstacle_max_cells", room.obstacle_max_cells);
  r.Finish();
}

}  // namespace

double TrainingSpec::LearningRate(int epoch) const {
  double lr = lr_schedule.front().lr;
  for (const LrStep& s : lr_schedule) {
    if (s.epoch <= epoch) lr = s.lr;
  }
  return lr;
}

std::uint64_t& Seeds::ByName(const std::string& name) {
  if (name == "env") return env;
  if (name == "trajectory") return trajectory;
  if (name == "noise") return noise;
  if (name == "init") return init;
  if (name == "shuffle") return shuffle;
  if (name == "orientation") return orientation;
  if (name == "eval") return eval;
  Invalid("seeds", "unknown seed name '" + name + "'");
}

const std::vector<std::string>& Seeds::Names() {
  static const std::vector<std::string> names{
      "env", "trajectory", "noise", "init", "shuffle", "orientation", "eval"};
  return names;
}

collect::ObservationConfig ExperimentConfig::ObservationConfig() const {
  collect::ObservationConfig oc;
  oc.modality = collect::ParseModality(modality);
  oc.d_max = collection.d_max.value_or(std::numeric_limits<double>::infinity());
  oc.n_beams = collection.n_beams;
  oc.max_range = collection.max_range;
  oc.orientations = collection.orientations;
  oc.orientation_samples = collection.orientation_samples;
  oc.heading_seed = seeds.orientation;
  return oc;
}

collect::NoiseConfig ExperimentConfig::NoiseConfig() const {
  collect::NoiseConfig nc;
  nc.w = noise.w;
  nc.model = noise.model == "pair" ? collect::NoiseModel::kPair
                                   : collect::NoiseModel::kIncrement;
  nc.seed = seeds.noise;
  return nc;
}

std::string ConfigToJson(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["name"] = c.name;
  json room_obstacles = json::array();
  for (const auto& o : c.environment.room.obstacles) {
    room_obstacles.push_back(
        {{"row0", o.row0}, {"col0", o.col0}, {"rows", o.rows}, {"cols", o.cols}});
  }
  const env::RoomSpec& room = c.environment.room;
  j["environment"] = {
      {"kind", c.environment.kind},
      {"bounds", BoundsJson(c.environment.bounds)},
      {"landmarks", c.environment.landmarks},
      {"room",
       {{"rows", room.rows},
        {"cols", room.cols},
        {"cell_size", room.cell_size},
        {"origin", {room.origin.x(), room.origin.y()}},
        {"wall_thickness", room.wall_thickness},
        {"obstacles", room_obstacles},
        {"random_obstacles", room.random_obstacles},
        {"obstacle_min_cells", room.obstacle_min_cells},
        {"obstacle_max_cells", room.obstacle_max_cells}}},
      {"file", c.environment.file}};
  j["modality"] = c.modality;
  const CollectionSpec& col = c.collection;
  j["collection"] = {
      {"strategy", col.strategy},
      {"spacing", col.spacing},
      {"segments", col.segments},
      {"sample_budget", col.sample_budget},
      {"positions", col.positions},
      {"d_max", col.d_max ? json(*col.d_max) : json(nullptr)},
      {"n_beams", col.n_beams},
      {"max_range", col.max_range},
      {"orientations", col.orientations},
      {"orientation_samples", col.orientation_samples}};
  j["noise"] = {{"w", c.noise.w}, {"model", c.noise.model}};
  j["model"] = {{"layers", c.layers}, {"activation", c.activation}};
  json schedule = json::array();
  for (const LrStep& s : c.training.lr_schedule) {
    schedule.push_back({{"epoch", s.epoch}, {"lr", s.lr}});
  }
  j["training"] = {{"epochs", c.training.epochs},
                   {"batch_size", c.training.batch_size},
                   {"lr_schedule", schedule},
                   {"beta1", c.training.beta1},
                   {"beta2", c.training.beta2},
                   {"epsilon", c.training.epsilon}};
  j["method"] = c.method;
  j["eval"] = {{"grid_resolution", c.eval.grid_resolution},
               {"alignment_points", c.eval.alignment_points},
               {"test_positions", c.eval.test_positions},
               {"pca_components", c.eval.pca_components},
               {"explicit_restarts", c.eval.explicit_restarts},
               {"explicit_max_iters", c.eval.explicit_max_iters},
               {"mds_points", c.eval.mds_points}};
  j["sweep"] = {{"kind", c.sweep.kind}, {"values", c.sweep.values}};
  j["paths"] = {{"dataset", c.paths.dataset}, {"model", c.paths.model}};
  json seeds;
  Seeds s = c.seeds;
  for (const std::string& name : Seeds::Names()) seeds[name] = s.ByName(name);
  j["seeds"] = seeds;
  return j.dump(2);
}

ExperimentConfig ConfigFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidConfig, std::string("config is not JSON: ") + e.what());
  }
  ExperimentConfig c;
  ObjectReader root(j, "");
  int version = kConfigSchemaVersion;
  root.Read("schema_version", version);
  Check(version == kConfigSchemaVersion, "schema_version", "unsupported version");
  root.Read("name", c.name);

  if (const json* e = root.Child("environment")) {
    ObjectReader r(*e, "environment");
    r.Read("kind", c.environment.kind);
    if (const json* b = r.Child("bounds")) ReadBounds(*b, "environment.bounds", c.environment.bounds);
    r.Read("landmarks", c.environment.landmarks);
    if (const json* room = r.Child("room")) ReadRoom(*room, "environment.room", c.environment.room);
    r.Read("file", c.environment.file);
    r.Finish();
  }
  root.Read("modality", c.modality);
  if (const json* e = root.Child("collection")) {
    ObjectReader r(*e, "collection");
    r.Read("strategy", c.collection.strategy);
    r.Read("spacing", c.collection.spacing);
    r.Read("segments", c.collection.segments);
    r.Read("sample_budget", c.collection.sample_budget);
    r.Read("positions", c.collection.positions);
    r.ReadOptional("d_max", c.collection.d_max);
    r.Read("n_beams", c.collection.n_beams);
    r.Read("max_range", c.collection.max_range);
    r.Read("orientations", c.collection.orientations);
    r.Read("orientation_samples", c.collection.orientation_samples);
    r.Finish();
  }
  if (const json* e = root.Child("noise")) {
    ObjectReader r(*e, "noise");
    r.Read("w", c.noise.w);
    r.Read("model", c.noise.model);
    r.Finish();
  }
  if (const json* e = root.Child("model")) {
    ObjectReader r(*e, "model");
    r.Read("layers", c.layers);
    r.Read("activation", c.activation);
    r.Finish();
  }
  if (const json* e = root.Child("training")) {
    ObjectReader r(*e, "training");
    r.Read("epochs", c.training.epochs);
    r.Read("batch_size", c.training.batch_size);
    if (const json* s = r.Child("lr_schedule")) {
      Check(s->is_array(), "training.lr_schedule", "must be an array");
      c.training.lr_schedule.clear();
      for (std::size_t i = 0; i < s->size(); ++i) {
        LrStep step;
        ObjectReader sr((*s)[i], "training.lr_schedule[" + std::to_string(i) + "]");
        sr.Read("epoch", step.epoch);
        sr.Read("lr", step.lr);
        sr.Finish();
        c.training.lr_schedule.push_back(step);
      }
    }
    r.Read("beta1", c.training.beta1);
    r.Read("beta2", c.training.beta2);
    r.Read("epsilon", c.training.epsilon);
    r.Finish();
  }
  root.Read("method", c.method);
  if (const json* e = root.Child("eval")) {
    ObjectReader r(*e, "eval");
    r.Read("grid_resolution", c.eval.grid_resolution);
    r.Read("alignment_points", c.eval.alignment_points);
    r.Read("test_positions", c.eval.test_positions);
    r.Read("pca_components", c.eval.pca_components);
    r.Read("explicit_restarts", c.eval.explicit_restarts);
    r.Read("explicit_max_iters", c.eval.explicit_max_iters);
    r.Read("mds_points", c.eval.mds_points);
    r.Finish();
  }
  if (const json* e = root.Child("sweep")) {
    ObjectReader r(*e, "sweep");
    r.Read("kind", c.sweep.kind);
    r.Read("values", c.sweep.values);
    r.Finish();
  }
  if (const json* e = root.Child("paths")) {
    ObjectReader r(*e, "paths");
    r.Read("dataset", c.paths.dataset);
    r.Read("model", c.paths.model);
    r.Finish();
  }
  const json* seeds = root.Child("seeds");
  Check(seeds != nullptr, "seeds", "missing (every seed must be explicit)");
  {
    ObjectReader r(*seeds, "seeds");
    for (const std::string& name : Seeds::Names()) {
      Check(r.Has(name), r.Field(name), "missing seed");
      r.Read(name, c.seeds.ByName(name));
    }
    r.Finish();
  }
  root.Finish();
  ValidateConfig(c);
  return c;
}

void ValidateConfig(const ExperimentConfig& c) {
  const auto& e = c.environment;
  Check(e.kind == "landmarks" || e.kind == "room" || e.kind == "file",
        "environment.kind", "must be landmarks, room or file");
  Check(e.bounds.xmin < e.bounds.xmax && e.bounds.ymin < e.bounds.ymax,
        "environment.bounds", "must be a nonempty rectangle");
  Check(e.landmarks >= 1, "environment.landmarks", "must be >= 1");
  Check(e.room.rows >= 3 && e.room.cols >= 3, "environment.room", "needs at least 3x3 cells");
  Check(e.room.cell_size > 0.0, "environment.room.cell_size", "must be > 0");
  Check(e.room.random_obstacles >= 0, "environment.room.random_obstacles", "must be >= 0");
  Check(e.room.obstacle_min_cells >= 1 &&
            e.room.obstacle_max_cells >= e.room.obstacle_min_cells,
        "environment.room.obstacle_min_cells", "invalid obstacle size range");
  Check(e.kind != "file" || !e.file.empty(), "environment.file", "required for kind 'file'");

  Check(c.modality == "landmarks" || c.modality == "lidar", "modality",
        "must be landmarks or lidar");
  Check(!(c.modality == "landmarks" && e.kind == "room"), "modality",
        "landmark observations need a landmark environment");
  Check(!(c.modality == "lidar" && e.kind == "landmarks"), "modality",
        "lidar observations need a room environment");

  const auto& col = c.collection;
  Check(col.strategy == "dense" || col.strategy == "endpoint", "collection.strategy",
        "must be dense or endpoint");
  Check(col.spacing > 0.0, "collection.spacing", "must be > 0");
  Check(col.segments >= 0, "collection.segments", "must be >= 0");
  Check(col.segments > 0 || col.sample_budget > 0, "collection.segments",
        "segments or sample_budget must be positive");
  Check(col.sample_budget != 1, "collection.sample_budget", "must be 0 or >= 2");
  Check(col.positions >= 2, "collection.positions", "must be >= 2");
  Check(!col.d_max || *col.d_max > 0.0, "collection.d_max", "must be > 0 or null");
  Check(col.n_beams >= 1, "collection.n_beams", "must be >= 1");
  Check(col.max_range > 0.0, "collection.max_range", "must be > 0");
  Check(col.orientations >= 1, "collection.orientations", "must be >= 1");
  Check(col.orientation_samples >= 1 && col.orientation_samples <= col.orientations,
        "collection.orientation_samples", "must be in [1, orientations]");

  Check(c.noise.w >= 0.0, "noise.w", "must be >= 0");
  Check(c.noise.model == "increment" || c.noise.model == "pair", "noise.model",
        "must be increment or pair");

  Check(c.layers.size() >= 2, "model.layers", "needs at least 2 sizes");
  Check(std::all_of(c.layers.begin(), c.layers.end(), [](int s) { return s > 0; }),
        "model.layers", "sizes must be positive");
  Check(c.layers.back() == 2, "model.layers", "output size must be 2");
  Check(c.activation == "relu" || c.activation == "identity", "model.activation",
        "must be relu or identity");

  const auto& t = c.training;
  Check(t.epochs >= 1, "training.epochs", "must be >= 1");
  Check(t.batch_size >= 2, "training.batch_size", "must be >= 2");
  Check(!t.lr_schedule.empty() && t.lr_schedule.front().epoch == 0,
        "training.lr_schedule", "must start at epoch 0");
  for (std::size_t i = 0; i < t.lr_schedule.size(); ++i) {
    Check(t.lr_schedule[i].lr > 0.0, "training.lr_schedule", "rates must be > 0");
    Check(i == 0 || t.lr_schedule[i].epoch > t.lr_schedule[i - 1].epoch,
          "training.lr_schedule", "epochs must increase");
  }
  Check(t.beta1 >= 0.0 && t.beta1 < 1.0, "training.beta1", "must be in [0, 1)");
  Check(t.beta2 >= 0.0 && t.beta2 < 1.0, "training.beta2", "must be in [0, 1)");
  Check(t.epsilon > 0.0, "training.epsilon", "must be > 0");

  static const std::set<std::string> methods{"deepgps", "supervised", "explicit",
                                             "mds_oracle", "pca_knn"};
  Check(methods.count(c.method) == 1, "method",
        "must be deepgps, supervised, explicit, mds_oracle or pca_knn");
  Check(!(c.method == "explicit" && c.modality != "landmarks"), "method",
        "explicit positioning needs landmark observations");

  Check(c.eval.grid_resolution >= 2, "eval.grid_resolution", "must be >= 2");
  Check(c.eval.alignment_points >= 2, "eval.alignment_points", "must be >= 2");
  Check(c.eval.test_positions >= 1, "eval.test_positions", "must be >= 1");
  Check(c.eval.pca_components >= 1, "eval.pca_components", "must be >= 1");
  Check(c.eval.explicit_restarts >= 1, "eval.explicit_restarts", "must be >= 1");
  Check(c.eval.explicit_max_iters >= 1, "eval.explicit_max_iters", "must be >= 1");
  Check(c.eval.mds_points >= 2, "eval.mds_points", "must be >= 2");

  Check(c.sweep.kind == "none" || c.sweep.kind == "noise" || c.sweep.kind == "samples",
        "sweep.kind", "must be none, noise or samples");
}

const std::vector<std::string>& PresetNames() {
  static const std::vector<std::string> names{
      "toy-complete", "toy-incomplete", "lidar-room",
      "endpoint",     "noise-sweep",    "sample-sweep"};
  return names;
}

std::string PresetJson(const std::string& name) {
  return ConfigToJson(PresetConfig(name));
}

ExperimentConfig ResolveConfig(const std::string& preset,
                               const std::string& config_text,
                               const std::vector<std::string>& seed_overrides) {
  if (preset.empty() && config_text.empty()) {
    Fail(ErrorCode::kInvalidConfig, "config: need a preset or a config file");
  }
  json doc = preset.empty() ? json::object() : json::parse(PresetJson(preset));
  if (!config_text.empty()) {
    json patch;
    try {
      patch = json::parse(config_text);
    } catch (const json::exception& e) {
      Fail(ErrorCode::kInvalidConfig,
           std::string("config is not JSON: ") + e.what());
    }
    if (!patch.is_object()) Invalid("config", "must be a JSON object");
    doc.merge_patch(patch);
  }
  for (const std::string& item : seed_overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      Invalid("seed-override", "expected name=value, got '" + item + "'");
    }
    const std::string name = item.substr(0, eq);
    Seeds probe;
    probe.ByName(name);
    std::uint64_t value = 0;
    try {
      std::size_t used = 0;
      value = std::stoull(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      Invalid("seed-override", "seed '" + name + "' needs an unsigned integer");
    }
    doc["seeds"][name] = value;
  }
  return ConfigFromJson(doc.dump());
}

}  // namespace wsloc::exp
