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

#include "wsloc/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace wsloc::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kManifestVersion = 1;
constexpr int kReportVersion = 1;
constexpr int kStateVersion = 1;
constexpr char kPcaKnnMagic[8] = {'W', 'S', 'L', 'P', 'K', 'N', 'N', '\n'};

// Salts separating the uses of the eval seed.
constexpr std::uint64_t kSaltMdsSubset = 1;
constexpr std::uint64_t kSaltAlignment = 2;
constexpr std::uint64_t kSaltGridHeadings = 3;
constexpr std::uint64_t kSaltTestSet = 4;

constexpr int kLogEvery = 50;

class Stopwatch {
 public:
  double Lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void Log(const Logger& log, const std::string& line) {
  if (log) log(line);
}

bool IsNetwork(const std::string& method) {
  return method == "deepgps" || method == "supervised";
}

std::string DatasetPath(const exp::ExperimentConfig& c, const std::string& out) {
  return c.paths.dataset.empty() ? (fs::path(out) / kDatasetFile).string()
                                 : c.paths.dataset;
}

std::string ModelPath(const exp::ExperimentConfig& c, const std::string& out) {
  return c.paths.model.empty() ? (fs::path(out) / ArtifactName(c.method)).string()
                               : c.paths.model;
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    Fail(ErrorCode::kIo, "cannot create output directory " + dir);
  }
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchemaMismatch, path + ": " + e.what());
  }
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << text << '\n';
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path);
}

json PointsJson(const Points2& p) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < p.cols(); ++i) arr.push_back({p(0, i), p(1, i)});
  return arr;
}

Points2 PointsFromJson(const json& arr) {
  Points2 p(2, static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    p(0, static_cast<Eigen::Index>(i)) = arr[i].at(0).get<double>();
    p(1, static_cast<Eigen::Index>(i)) = arr[i].at(1).get<double>();
  }
  return p;
}

Points2 ToPoints(const std::vector<Vec2>& v) {
  Points2 p(2, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p.col(static_cast<Eigen::Index>(i)) = v[i];
  return p;
}

Points2 Columns(const Points2& p, const std::vector<std::size_t>& idx) {
  Points2 out(2, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = p.col(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

// First `n` entries of a seeded permutation of {0..size-1}, sorted.
std::vector<std::size_t> Subset(std::size_t size, std::size_t n, Rng rng) {
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(n, size));
  std::sort(all.begin(), all.end());
  return all;
}

void WriteDoubles(std::ostream& out, const double* data, std::size_t n) {
  std::vector<unsigned char> buf;
  constexpr std::size_t kChunk = 1 << 16;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t m = std::min(kChunk, n - start);
    buf.resize(m * 8);
    for (std::size_t i = 0; i < m; ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(data[start + i]);
      for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
}

void ReadDoubles(std::istream& in, double* data, std::size_t n) {
  std::vector<unsigned char> buf;
  constexpr std::size_t kChunk = 1 << 16;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t m = std::min(kChunk, n - start);
    buf.resize(m * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) Fail(ErrorCode::kSchemaMismatch, "PCA+KNN state truncated");
    for (std::size_t i = 0; i < m; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= std::uint64_t{buf[i * 8 + b]} << (8 * b);
      data[start + i] = std::bit_cast<double>(bits);
    }
  }
}

void WriteU64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t ReadU64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) Fail(ErrorCode::kSchemaMismatch, "PCA+KNN state truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
  return v;
}

env::Environment2D MakeEnvironment(const exp::ExperimentConfig& c) {
  const exp::EnvironmentSpec& e = c.environment;
  if (e.kind == "landmarks") {
    return env::GenerateLandmarkEnv(e.bounds, e.landmarks, c.seeds.env);
  }
  if (e.kind == "room") return env::GenerateRoomEnv(e.room, c.seeds.env);
  return env::LoadEnvironment(e.file);
}

collect::ConstraintGraph Collect(const exp::ExperimentConfig& c,
                                 const env::Environment2D& env) {
  if (c.collection.strategy == "endpoint") {
    return collect::CollectEndpoint(env, c.collection.positions,
                                    c.ObservationConfig(), c.NoiseConfig(),
                                    c.seeds.trajectory);
  }
  collect::DenseConfig dense;
  dense.segments = c.collection.segments;
  dense.sample_budget = c.collection.sample_budget;
  dense.spacing = c.collection.spacing;
  return collect::CollectDense(env, dense, c.ObservationConfig(), c.NoiseConfig(),
                               c.seeds.trajectory);
}

const std::vector<Vec2>& GroundTruth(const collect::ConstraintGraph& g,
                                     const std::string& method) {
  if (!g.has_ground_truth()) {
    Fail(ErrorCode::kInvalidConfig,
         "method: " + method + " needs ground-truth positions in the dataset");
  }
  return g.ground_truth(collect::GroundTruthAccess::Grant());
}

FittedMethod FitNetwork(const exp::ExperimentConfig& c, const Workspace& ws,
                        const Logger& log) {
  const collect::ConstraintGraph& full = *ws.graph;
  const bool supervised = c.method == "supervised";
  if (supervised) GroundTruth(full, c.method);

  net::Checkpoint start;
  start.model = net::InitParams(c.layers, c.seeds.init,
                                net::ParseActivation(c.activation));
  start.config_echo = exp::ConfigToJson(c);

  std::unique_ptr<collect::LidarRenderer> renderer;
  if (full.modality() == collect::Modality::kLidar) {
    renderer = std::make_unique<collect::LidarRenderer>(ws.env, full);
  }
  train::TrainOptions options;
  options.objective = supervised ? train::Objective::kSupervised
                                 : train::Objective::kWeak;
  options.spec = c.training;
  options.shuffle_seed = c.seeds.shuffle;
  options.orientation_seed = c.seeds.orientation;
  const int epochs = c.training.epochs;
  options.on_epoch = [&](int epoch, double loss) {
    if ((epoch + 1) % kLogEvery == 0 || epoch + 1 == epochs) {
      Log(log, "epoch " + std::to_string(epoch + 1) + "/" + std::to_string(epochs) +
                   " loss " + eval::FormatNumber(loss));
    }
  };

  train::TrainResult result;
  if (supervised) {
    result = train::Train(full, std::move(start), options, renderer.get());
  } else {
    result = train::Train(full.WithoutGroundTruth(), std::move(start), options,
                          renderer.get());
  }
  FittedMethod f;
  f.method = c.method;
  f.network = std::move(result.checkpoint);
  f.trace = std::move(result.trace);
  return f;
}

FittedMethod FitPcaKnn(const exp::ExperimentConfig& c, const Workspace& ws,
                       const Logger& log) {
  const collect::ConstraintGraph& g = *ws.graph;
  const Points2 gt = ToPoints(GroundTruth(g, c.method));
  const Eigen::MatrixXd stored = train::StoredInputs(g);
  const int k = std::min(c.eval.pca_components, static_cast<int>(stored.rows()));
  PcaKnnState state;
  state.basis = baselines::PcaFit(stored, k);

  Eigen::MatrixXd features;
  Points2 positions;
  if (g.modality() == collect::Modality::kLandmarks) {
    features = baselines::PcaProjectAll(state.basis, stored);
    positions = gt;
  } else {
    // Every grid heading of every training position enters the database.
    const collect::LidarRenderer renderer(ws.env, g);
    const int r_count = renderer.orientations();
    const auto n = static_cast<Eigen::Index>(g.size());
    features.resize(k, n * r_count);
    positions.resize(2, n * r_count);
    Eigen::MatrixXd scans(stored.rows(), r_count);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int r = 0; r < r_count; ++r) {
        scans.col(r) = renderer.Render(static_cast<std::size_t>(i), r);
      }
      features.middleCols(i * r_count, r_count) =
          baselines::PcaProjectAll(state.basis, scans);
      positions.middleCols(i * r_count, r_count).colwise() = gt.col(i);
    }
    Log(log, "PCA+KNN database: " + std::to_string(features.cols()) + " scans");
  }
  state.index = std::make_shared<baselines::KnnIndex>(std::move(features),
                                                      std::move(positions));
  FittedMethod f;
  f.method = c.method;
  f.pca_knn = std::move(state);
  return f;
}

json StatsJson(const eval::EvalReport& r) {
  return {{"rms", r.ate_rms},
          {"median", r.ate_median},
          {"max", r.ate_max},
          {"count", r.errors.cols()}};
}

json TransformJson(const eval::RigidTransform2D& t) {
  const auto& r = t.rotation;
  return {{"rotation", {{r(0, 0), r(0, 1)}, {r(1, 0), r(1, 1)}}},
          {"translation", {t.translation.x(), t.translation.y()}},
          {"reflection", t.IsReflection()}};
}

std::string ManifestJson(const exp::ExperimentConfig& c, const std::string& command,
                         const json& artifacts, const json& durations,
                         const json& extra) {
  json m;
  m["schema_version"] = kManifestVersion;
  m["command"] = command;
  m["config"] = json::parse(exp::ConfigToJson(c));
  m["artifacts"] = artifacts;
  m["durations_s"] = durations;
  m["final_loss"] = nullptr;
  for (const auto& item : extra.items()) m[item.key()] = item.value();
  return m.dump(2);
}

std::string FinishCommand(const exp::ExperimentConfig& c, const std::string& out,
                          const std::string& command, const json& artifacts,
                          const json& durations, const json& extra) {
  for (const auto& item : artifacts.items()) {
    if (!fs::exists(item.value().get<std::string>())) {
      Fail(ErrorCode::kInternal, "artifact missing after " + command + ": " +
                                     item.value().get<std::string>());
    }
  }
  const std::string text = ManifestJson(c, command, artifacts, durations, extra);
  WriteText((fs::path(out) / ManifestName(command)).string(), text);
  return text;
}

}  // namespace

std::string ManifestName(const std::string& command) {
  return "manifest_" + command + ".json";
}

Workspace BuildWorkspace(const exp::ExperimentConfig& config) {
  auto env = std::make_shared<const env::Environment2D>(MakeEnvironment(config));
  auto graph = std::make_shared<const collect::ConstraintGraph>(Collect(config, *env));
  return {std::move(env), std::move(graph)};
}

Workspace LoadWorkspace(const std::string& dataset_path) {
  collect::DatasetHeader header;
  auto graph = std::make_shared<const collect::ConstraintGraph>(
      collect::LoadDataset(dataset_path, &header));
  fs::path env_path(header.env_reference);
  if (env_path.is_relative()) env_path = fs::path(dataset_path).parent_path() / env_path;
  auto env = std::make_shared<const env::Environment2D>(
      env::LoadEnvironment(env_path.string()));
  return {std::move(env), std::move(graph)};
}

FittedMethod Fit(const exp::ExperimentConfig& config, const Workspace& ws,
                 const Logger& log) {
  const collect::ConstraintGraph& g = *ws.graph;
  if (collect::ModalityName(g.modality()) != config.modality) {
    Fail(ErrorCode::kInvalidConfig, "modality: dataset holds " +
                                        collect::ModalityName(g.modality()) +
                                        " observations");
  }
  if (IsNetwork(config.method)) return FitNetwork(config, ws, log);
  if (config.method == "pca_knn") return FitPcaKnn(config, ws, log);

  FittedMethod f;
  f.method = config.method;
  if (config.method == "explicit") {
    baselines::ExplicitOptions options;
    options.max_iters = config.eval.explicit_max_iters;
    f.explicit_state = baselines::ExplicitSolveRestarts(
        g.WithoutGroundTruth(), ws.env->bounds(), config.eval.explicit_restarts,
        config.seeds.init, options);
    Log(log, "explicit residual norm " +
                 eval::FormatNumber(f.explicit_state->ResidualNorm()));
    return f;
  }
  // mds_oracle: exact distances between ground-truth positions.
  const Points2 gt = ToPoints(GroundTruth(g, config.method));
  MdsState mds;
  mds.indices = Subset(g.size(), config.eval.mds_points,
                       MakeRng(config.seeds.eval, {kSaltMdsSubset}));
  const baselines::MdsResult r = baselines::ClassicalMds(
      baselines::EdmMatrix::FromPoints(Columns(gt, mds.indices)), 2);
  mds.coords = r.coords;
  mds.eigenvalues = r.eigenvalues;
  mds.not_euclidean = r.not_euclidean;
  f.mds = std::move(mds);
  return f;
}

std::string ArtifactName(const std::string& method) {
  if (IsNetwork(method)) return kCheckpointFile;
  if (method == "explicit") return kExplicitFile;
  if (method == "mds_oracle") return kMdsFile;
  if (method == "pca_knn") return kPcaKnnFile;
  Fail(ErrorCode::kInvalidConfig, "method: unknown method '" + method + "'");
}

void SaveFitted(const FittedMethod& f, const std::string& path) {
  if (f.network) {
    net::SaveCheckpoint(*f.network, path);
  } else if (f.explicit_state) {
    json j;
    j["schema_version"] = kStateVersion;
    j["method"] = f.method;
    j["landmarks"] = PointsJson(f.explicit_state->landmarks);
    j["positions"] = PointsJson(f.explicit_state->positions);
    j["residual_norm"] = f.explicit_state->ResidualNorm();
    j["iterations"] = f.explicit_state->iterations;
    WriteText(path, j.dump());
  } else if (f.mds) {
    json j;
    j["schema_version"] = kStateVersion;
    j["method"] = f.method;
    j["indices"] = f.mds->indices;
    j["coords"] = PointsJson(f.mds->coords);
    j["eigenvalues"] = std::vector<double>(f.mds->eigenvalues.data(),
                                           f.mds->eigenvalues.data() +
                                               f.mds->eigenvalues.size());
    j["not_euclidean"] = f.mds->not_euclidean;
    WriteText(path, j.dump());
  } else if (f.pca_knn) {
    const baselines::PcaBasis& b = f.pca_knn->basis;
    const baselines::KnnIndex& idx = *f.pca_knn->index;
    std::ofstream out(path, std::ios::binary);
    if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
    json h;
    h["schema_version"] = kStateVersion;
    h["dim"] = b.dim();
    h["k"] = b.k();
    h["entries"] = idx.size();
    h["rank_deficient"] = b.rank_deficient;
    const std::string text = h.dump();
    out.write(kPcaKnnMagic, sizeof(kPcaKnnMagic));
    WriteU64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    WriteDoubles(out, b.mean.data(), static_cast<std::size_t>(b.mean.size()));
    WriteDoubles(out, b.components.data(), static_cast<std::size_t>(b.components.size()));
    WriteDoubles(out, b.explained_variance.data(),
                 static_cast<std::size_t>(b.explained_variance.size()));
    WriteDoubles(out, idx.features().data(), static_cast<std::size_t>(idx.features().size()));
    WriteDoubles(out, idx.positions().data(), static_cast<std::size_t>(idx.positions().size()));
    if (!out) Fail(ErrorCode::kIo, "write failed for " + path);
  } else {
    Fail(ErrorCode::kInternal, "nothing to save for method " + f.method);
  }
}

FittedMethod LoadFitted(const std::string& method, const std::string& path,
                        const exp::ExperimentConfig& config) {
  FittedMethod f;
  f.method = method;
  if (IsNetwork(method)) {
    f.network = net::LoadCheckpoint(path, config.layers);
    return f;
  }
  if (method == "pca_knn") {
    std::ifstream in(path, std::ios::binary);
    if (!in) Fail(ErrorCode::kIo, "cannot read " + path);
    char magic[sizeof(kPcaKnnMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kPcaKnnMagic, sizeof(magic)) != 0) {
      Fail(ErrorCode::kSchemaMismatch, path + " is not a PCA+KNN state");
    }
    const std::uint64_t len = ReadU64(in);
    if (len > (1u << 20)) Fail(ErrorCode::kSchemaMismatch, "header too large");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    json h;
    try {
      h = json::parse(text);
      if (h.at("schema_version").get<int>() != kStateVersion) {
        Fail(ErrorCode::kSchemaMismatch, path + ": unsupported version");
      }
    } catch (const json::exception& e) {
      Fail(ErrorCode::kSchemaMismatch, path + ": " + e.what());
    }
    const auto d = h.at("dim").get<Eigen::Index>();
    const auto k = h.at("k").get<Eigen::Index>();
    const auto n = h.at("entries").get<Eigen::Index>();
    PcaKnnState s;
    s.basis.mean.resize(d);
    s.basis.components.resize(d, k);
    s.basis.explained_variance.resize(k);
    s.basis.rank_deficient = h.at("rank_deficient").get<bool>();
    Eigen::MatrixXd features(k, n);
    Points2 positions(2, n);
    ReadDoubles(in, s.basis.mean.data(), static_cast<std::size_t>(d));
    ReadDoubles(in, s.basis.components.data(), static_cast<std::size_t>(d * k));
    ReadDoubles(in, s.basis.explained_variance.data(), static_cast<std::size_t>(k));
    ReadDoubles(in, features.data(), static_cast<std::size_t>(k * n));
    ReadDoubles(in, positions.data(), static_cast<std::size_t>(2 * n));
    s.index = std::make_shared<baselines::KnnIndex>(std::move(features),
                                                    std::move(positions));
    f.pca_knn = std::move(s);
    return f;
  }
  const json j = ReadJsonFile(path);
  try {
    if (j.at("schema_version").get<int>() != kStateVersion ||
        j.at("method").get<std::string>() != method) {
      Fail(ErrorCode::kSchemaMismatch, path + " does not hold " + method + " state");
    }
    if (method == "explicit") {
      baselines::ExplicitState s;
      s.landmarks = PointsFromJson(j.at("landmarks"));
      s.positions = PointsFromJson(j.at("positions"));
      s.iterations = j.at("iterations").get<int>();
      f.explicit_state = std::move(s);
    } else if (method == "mds_oracle") {
      MdsState s;
      s.indices = j.at("indices").get<std::vector<std::size_t>>();
      s.coords = PointsFromJson(j.at("coords"));
      const auto ev = j.at("eigenvalues").get<std::vector<double>>();
      s.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(),
                                                        static_cast<Eigen::Index>(ev.size()));
      s.not_euclidean = j.at("not_euclidean").get<bool>();
      f.mds = std::move(s);
    } else {
      Fail(ErrorCode::kInvalidConfig, "method: unknown method '" + method + "'");
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kSchemaMismatch, path + ": " + e.what());
  }
  return f;
}

EvalOutcome Evaluate(const exp::ExperimentConfig& config, const Workspace& ws,
                     const FittedMethod& fitted) {
  const collect::ConstraintGraph& g = *ws.graph;
  const env::Environment2D& env = *ws.env;
  const Points2 gt = ToPoints(GroundTruth(g, "evaluation"));
  const std::string& method = fitted.method;

  eval::Predictor predict;
  Points2 train_pred;
  Points2 train_gt = gt;
  int triangulation_failures = 0;
  if (fitted.network) {
    const net::MlpModel& model = fitted.network->model;
    if (model.input_dim() != g.InputDim()) {
      Fail(ErrorCode::kDimensionMismatch, "model input size does not match the "
                                          "dataset observations");
    }
    predict = [&model](const Eigen::MatrixXd& x) { return train::Predict(model, x); };
    train_pred = predict(train::StoredInputs(g));
  } else if (fitted.pca_knn) {
    const PcaKnnState& s = *fitted.pca_knn;
    predict = [&s](const Eigen::MatrixXd& x) {
      return s.index->PredictBatch(baselines::PcaProjectAll(s.basis, x));
    };
    train_pred = predict(train::StoredInputs(g));
  } else if (fitted.explicit_state) {
    const baselines::ExplicitState& s = *fitted.explicit_state;
    if (static_cast<std::size_t>(s.positions.cols()) != g.size()) {
      Fail(ErrorCode::kLengthMismatch, "explicit state does not match the dataset");
    }
    std::vector<Vec2> landmarks;
    for (Eigen::Index k = 0; k < s.landmarks.cols(); ++k) landmarks.push_back(s.landmarks.col(k));
    const Vec2 centroid = s.landmarks.rowwise().mean();
    const double d_max = g.obs_config().d_max;
    predict = [landmarks, centroid, d_max, &triangulation_failures](
                  const Eigen::MatrixXd& x) {
      Points2 out(2, x.cols());
      for (Eigen::Index i = 0; i < x.cols(); ++i) {
        try {
          out.col(i) = baselines::Triangulate(landmarks, x.col(i), d_max);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateGeometry) throw;
          out.col(i) = centroid;
          ++triangulation_failures;
        }
      }
      return out;
    };
    train_pred = s.positions;
  } else if (fitted.mds) {
    train_pred = fitted.mds->coords;
    train_gt = Columns(gt, fitted.mds->indices);
  } else {
    Fail(ErrorCode::kInternal, "nothing to evaluate for method " + method);
  }

  const std::vector<std::size_t> align_idx =
      Subset(static_cast<std::size_t>(train_pred.cols()), config.eval.alignment_points,
             MakeRng(config.seeds.eval, {kSaltAlignment}));
  const eval::RigidTransform2D aligned = eval::RigidAlign(
      Columns(train_pred, align_idx), Columns(train_gt, align_idx), true);
  const eval::RigidTransform2D identity;
  const bool primary_aligned = !(method == "supervised" || method == "pca_knn");
  const eval::RigidTransform2D& primary_tf = primary_aligned ? aligned : identity;
  const std::string primary_tag = primary_aligned ? "aligned" : "raw";

  EvalOutcome outcome;
  json sets;
  auto add_set = [&](const std::string& name, const Points2& pred, const Points2& truth) {
    const eval::EvalReport raw = eval::AteWithTransform(pred, truth, identity);
    const eval::EvalReport al = eval::AteWithTransform(pred, truth, aligned);
    sets[name] = {{"raw", StatsJson(raw)}, {"aligned", StatsJson(al)}};
    const std::string dataset = config.name + "/" + name;
    outcome.summary.push_back({method + "/raw", dataset, raw.ate_rms, raw.ate_median, raw.ate_max});
    outcome.summary.push_back(
        {method + "/aligned", dataset, al.ate_rms, al.ate_median, al.ate_max});
  };
  add_set("train", train_pred, train_gt);

  std::string primary_set = "train";
  Points2 primary_pred = train_pred;
  Points2 primary_gt = train_gt;
  if (predict) {
    collect::ObservationConfig grid_cfg = g.obs_config();
    grid_cfg.heading_seed = MakeRng(config.seeds.eval, {kSaltGridHeadings})();
    const std::vector<eval::GridEntry> raw_grid = eval::ErrorGrid(
        env, predict, config.eval.grid_resolution, grid_cfg, identity);
    Points2 grid_pred(2, static_cast<Eigen::Index>(raw_grid.size()));
    Points2 grid_gt(2, grid_pred.cols());
    for (std::size_t i = 0; i < raw_grid.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      grid_gt.col(c) = raw_grid[i].position;
      grid_pred.col(c) = raw_grid[i].position + raw_grid[i].error;
    }
    add_set("grid", grid_pred, grid_gt);
    const Points2 moved = primary_tf.Apply(grid_pred);
    for (std::size_t i = 0; i < raw_grid.size(); ++i) {
      eval::GridEntry e = raw_grid[i];
      e.error = moved.col(static_cast<Eigen::Index>(i)) - e.position;
      e.magnitude = e.error.norm();
      outcome.grid.push_back(e);
    }
    primary_set = "grid";
    primary_pred = grid_pred;
    primary_gt = grid_gt;

    if (g.modality() == collect::Modality::kLidar) {
      Rng rng = MakeRng(config.seeds.eval, {kSaltTestSet});
      const env::Bounds& b = env.bounds();
      const auto n = static_cast<Eigen::Index>(config.eval.test_positions);
      Points2 test_gt(2, n);
      Eigen::MatrixXd inputs(g.InputDim(), n);
      for (Eigen::Index i = 0; i < n; ++i) {
        Vec2 p;
        do {
          p = Vec2(Uniform(rng, b.xmin, b.xmax), Uniform(rng, b.ymin, b.ymax));
        } while (!env.IsFree(p));
        test_gt.col(i) = p;
        inputs.col(i) = collect::Observe(env, p, g.obs_config(), rng).values;
      }
      const Points2 test_pred = predict(inputs);
      add_set("test", test_pred, test_gt);
      primary_set = "test";
      primary_pred = test_pred;
      primary_gt = test_gt;
    }
  }

  outcome.primary = eval::AteWithTransform(primary_pred, primary_gt, primary_tf);
  outcome.primary.aligned = primary_aligned;
  outcome.primary.grid = outcome.grid;
  outcome.primary.config_echo = exp::ConfigToJson(config);

  json report;
  report["schema_version"] = kReportVersion;
  report["method"] = method;
  report["modality"] = collect::ModalityName(g.modality());
  report["dataset"] = config.name;
  report["primary"] = {{"set", primary_set},
                       {"alignment", primary_tag},
                       {"rms", outcome.primary.ate_rms},
                       {"median", outcome.primary.ate_median},
                       {"max", outcome.primary.ate_max}};
  report["alignment"] = TransformJson(aligned);
  report["alignment"]["estimated_on"] = align_idx.size();
  report["alignment"]["allow_reflection"] = true;
  report["sets"] = sets;
  report["grid_entries"] = outcome.grid.size();
  report["environment_diagonal"] = env.bounds().Diagonal();
  if (fitted.network) report["parameter_count"] = fitted.network->model.ParameterCount();
  if (fitted.pca_knn) {
    const auto& s = *fitted.pca_knn;
    report["footprint_scalars"] =
        s.index->FootprintScalars() + static_cast<std::size_t>(s.basis.mean.size() +
                                                               s.basis.components.size());
    report["database_entries"] = s.index->size();
  }
  if (fitted.explicit_state) report["triangulation_failures"] = triangulation_failures;
  if (fitted.mds) {
    report["not_euclidean"] = fitted.mds->not_euclidean;
    const Eigen::VectorXd& ev = fitted.mds->eigenvalues;
    report["leading_eigenvalues"] =
        std::vector<double>(ev.data(), ev.data() + std::min<Eigen::Index>(3, ev.size()));
  }
  report["config"] = json::parse(outcome.primary.config_echo);
  outcome.report_json = report.dump(2);
  return outcome;
}

std::string CmdCollect(const exp::ExperimentConfig& config, const std::string& out,
                       const Logger& log) {
  Stopwatch watch;
  EnsureDir(out);
  const Workspace ws = BuildWorkspace(config);
  const double t_collect = watch.Lap();
  const std::string dataset_path = DatasetPath(config, out);
  const fs::path dataset_dir = fs::path(dataset_path).parent_path();
  if (!dataset_dir.empty()) EnsureDir(dataset_dir.string());
  const fs::path env_path = fs::path(out) / kEnvFile;
  env::SaveEnvironment(*ws.env, env_path.string());

  collect::DatasetHeader header;
  header.env_reference =
      fs::proximate(env_path, dataset_dir.empty() ? fs::path(".") : dataset_dir).string();
  header.config_echo = exp::ConfigToJson(config);
  header.seed = config.seeds.trajectory;
  collect::SaveDataset(*ws.graph, header, dataset_path);
  const double t_write = watch.Lap();
  Log(log, "collected " + std::to_string(ws.graph->size()) + " observations on " +
               std::to_string(ws.graph->segments().size()) + " segments");

  return FinishCommand(
      config, out, "collect",
      {{"environment", env_path.string()}, {"dataset", dataset_path}},
      {{"collect", t_collect}, {"write", t_write}},
      {{"observations", ws.graph->size()}, {"segments", ws.graph->segments().size()}});
}

std::string CmdTrain(const exp::ExperimentConfig& config, const std::string& out,
                     const Logger& log) {
  Stopwatch watch;
  EnsureDir(out);
  const std::string dataset_path = DatasetPath(config, out);
  const Workspace ws = LoadWorkspace(dataset_path);
  const double t_load = watch.Lap();
  const FittedMethod fitted = Fit(config, ws, log);
  const double t_fit = watch.Lap();

  const std::string model_path = ModelPath(config, out);
  SaveFitted(fitted, model_path);
  json artifacts = {{"dataset", dataset_path}, {"model", model_path}};
  json extra = json::object();
  if (fitted.network) {
    const std::string loss_path = (fs::path(out) / kLossFile).string();
    train::WriteLossCsv(loss_path, fitted.trace);
    artifacts["loss_trace"] = loss_path;
    if (!fitted.trace.empty()) extra["final_loss"] = fitted.trace.back().loss;
    extra["parameter_count"] = fitted.network->model.ParameterCount();
  }
  if (fitted.explicit_state) extra["final_loss"] = fitted.explicit_state->ResidualNorm();
  const double t_write = watch.Lap();
  return FinishCommand(config, out, "train", artifacts,
                       {{"load", t_load}, {"fit", t_fit}, {"write", t_write}}, extra);
}

std::string CmdEval(const exp::ExperimentConfig& config, const std::string& out,
                    const Logger& log) {
  Stopwatch watch;
  EnsureDir(out);
  const std::string dataset_path = DatasetPath(config, out);
  const std::string model_path = ModelPath(config, out);
  const Workspace ws = LoadWorkspace(dataset_path);
  const FittedMethod fitted = LoadFitted(config.method, model_path, config);
  const double t_load = watch.Lap();
  const EvalOutcome outcome = Evaluate(config, ws, fitted);
  const double t_eval = watch.Lap();

  const std::string report_path = (fs::path(out) / kEvalReportFile).string();
  const std::string summary_path = (fs::path(out) / kAteSummaryFile).string();
  const std::string grid_path = (fs::path(out) / kErrorGridFile).string();
  WriteText(report_path, outcome.report_json);
  eval::WriteAteSummaryCsv(summary_path, outcome.summary);
  eval::WriteErrorGridCsv(grid_path, outcome.grid);
  const double t_write = watch.Lap();
  Log(log, "ATE rms " + eval::FormatNumber(outcome.primary.ate_rms) + " median " +
               eval::FormatNumber(outcome.primary.ate_median) + " max " +
               eval::FormatNumber(outcome.primary.ate_max));
  return FinishCommand(config, out, "eval",
                       {{"dataset", dataset_path},
                        {"model", model_path},
                        {"report", report_path},
                        {"ate_summary", summary_path},
                        {"error_grid", grid_path}},
                       {{"load", t_load}, {"eval", t_eval}, {"write", t_write}},
                       json::object());
}

std::string CmdSweep(const exp::ExperimentConfig& config, const std::string& out,
                     const Logger& log) {
  Stopwatch watch;
  EnsureDir(out);
  if (config.sweep.kind == "none") {
    Fail(ErrorCode::kInvalidConfig, "sweep.kind: set noise or samples to run a sweep");
  }
  if (config.sweep.values.empty()) {
    Fail(ErrorCode::kInvalidConfig, "sweep.values: empty sweep list");
  }
  if (!IsNetwork(config.method)) {
    Fail(ErrorCode::kInvalidConfig, "method: sweeps retrain deepgps or supervised");
  }

  auto run_one = [&](const exp::ExperimentConfig& c, const Workspace& ws) {
    const FittedMethod fitted = Fit(c, ws, log);
    return Evaluate(c, ws, fitted).primary;
  };

  eval::SweepTable table;
  if (config.sweep.kind == "noise") {
    table = eval::NoiseSweep(config.sweep.values, [&](double w) {
      exp::ExperimentConfig c = config;
      c.noise.w = w;
      Log(log, "sweep w = " + eval::FormatNumber(w));
      return run_one(c, BuildWorkspace(c));
    });
  } else {
    const Workspace full = BuildWorkspace(config);
    const std::size_t available = full.graph->size();
    std::vector<std::size_t> counts;
    for (double v : config.sweep.values) {
      if (v < 0.0 || v != std::floor(v)) {
        Fail(ErrorCode::kInvalidConfig, "sweep.values: sample counts must be "
                                        "nonnegative integers");
      }
      counts.push_back(v == 0.0 ? available : static_cast<std::size_t>(v));
    }
    table = eval::SampleCountSweep(counts, available, [&](double n_value) {
      const auto n = static_cast<std::size_t>(n_value);
      Log(log, "sweep n = " + std::to_string(n));
      if (n == available) return run_one(config, full);
      Workspace sub{full.env, std::make_shared<const collect::ConstraintGraph>(
                                  full.graph->Prefix(n, config.seeds.shuffle))};
      return run_one(config, sub);
    });
  }
  const double t_sweep = watch.Lap();

  const std::string csv_path = (fs::path(out) / kSweepFile).string();
  const std::string report_path = (fs::path(out) / kSweepReportFile).string();
  eval::WriteSweepCsv(csv_path, table);
  json rows = json::array();
  for (const eval::SweepRow& r : table.rows) {
    rows.push_back({{"param", r.param},
                    {"rms", r.rms},
                    {"median", r.median},
                    {"max", r.max},
                    {"flagged", r.flagged}});
  }
  WriteText(report_path, json{{"schema_version", kReportVersion},
                              {"parameter", table.parameter},
                              {"rows", rows},
                              {"config", json::parse(exp::ConfigToJson(config))}}
                             .dump(2));
  return FinishCommand(config, out, "sweep",
                       {{"sweep_table", csv_path}, {"sweep_report", report_path}},
                       {{"sweep", t_sweep}, {"write", watch.Lap()}},
                       {{"rows", table.rows.size()}});
}

}  // namespace wsloc::pipeline
