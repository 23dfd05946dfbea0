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

#include "wsloc/collect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace wsloc::collect {
namespace {

constexpr int kRetryCap = 1000;
constexpr int kDatasetSchemaVersion = 1;

Vec2 RandomFreePosition(const env::Environment2D& env, Rng& rng) {
  const env::Bounds& b = env.bounds();
  for (int attempt = 0; attempt < kRetryCap; ++attempt) {
    const Vec2 p(Uniform(rng, b.xmin, b.xmax), Uniform(rng, b.ymin, b.ymax));
    if (env.IsFree(p)) return p;
  }
  Fail(ErrorCode::kRetryExhausted, "no free position found");
}

// Largest travel distance along dir from p that stays inside the bounds
// and out of obstacles.
double FreeLength(const env::Environment2D& env, const Vec2& p,
                  const Vec2& dir) {
  const double exit = env::DistanceToBoundsExit(env.bounds(), p, dir);
  if (!env.occupancy() || exit <= 0.0) return exit;
  return env::RayCast(*env.occupancy(), p, dir, exit);
}

// Emits the running arc labels for steps of nominal length `step` using
// the configured noise model.
class LabelAccumulator {
 public:
  LabelAccumulator(const NoiseConfig& noise, Rng& stream)
      : noise_(noise), stream_(stream) {}

  double Next(std::size_t k, double step) {
    if (k == 0) {
      label_ = 0.0;
      return label_;
    }
    if (noise_.model == NoiseModel::kIncrement) {
      label_ += ApplyOdometryNoise(step, noise_, stream_);
    } else {
      label_ = std::max(label_, ApplyOdometryNoise(k * step, noise_, stream_));
    }
    return label_;
  }

 private:
  const NoiseConfig& noise_;
  Rng& stream_;
  double label_ = 0.0;
};

}  // namespace

std::string ModalityName(Modality m) {
  return m == Modality::kLandmarks ? "landmarks" : "lidar";
}

Modality ParseModality(const std::string& name) {
  if (name == "landmarks") return Modality::kLandmarks;
  if (name == "lidar") return Modality::kLidar;
  Fail(ErrorCode::kInvalidConfig, "unknown modality '" + name + "'");
}

ConstraintGraph::ConstraintGraph(Modality modality,
                                 ObservationConfig obs_config,
                                 std::vector<Observation> observations,
                                 std::vector<Segment> segments,
                                 std::vector<Vec2> gt_positions)
    : modality_(modality),
      obs_config_(obs_config),
      observations_(std::move(observations)),
      segments_(std::move(segments)),
      gt_positions_(std::move(gt_positions)) {
  obs_config_.modality = modality_;
  if (!gt_positions_.empty() && gt_positions_.size() != observations_.size()) {
    Fail(ErrorCode::kLengthMismatch,
         "ground-truth count differs from observation count");
  }
}

int ConstraintGraph::InputDim() const {
  if (observations_.empty()) return 0;
  return static_cast<int>(observations_.front().values.size());
}

ConstraintGraph ConstraintGraph::WithoutGroundTruth() const {
  return ConstraintGraph(modality_, obs_config_, observations_, segments_, {});
}

ConstraintGraph ConstraintGraph::Prefix(std::size_t n,
                                        std::uint64_t shuffle_seed) const {
  if (n > size()) {
    Fail(ErrorCode::kSampleBudgetExceeded,
         "requested " + std::to_string(n) + " samples from a dataset of " +
             std::to_string(size()));
  }
  std::vector<std::size_t> order(segments_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeRng(shuffle_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Observation> obs;
  std::vector<Segment> segs;
  std::vector<Vec2> gt;
  for (std::size_t s : order) {
    if (obs.size() >= n) break;
    const Segment& src = segments_[s];
    const std::size_t take = std::min(src.indices.size(), n - obs.size());
    Segment dst;
    for (std::size_t i = 0; i < take; ++i) {
      dst.indices.push_back(obs.size());
      dst.arc_labels.push_back(src.arc_labels[i]);
      obs.push_back(observations_[src.indices[i]]);
      if (has_ground_truth()) gt.push_back(gt_positions_[src.indices[i]]);
    }
    segs.push_back(std::move(dst));
  }
  return ConstraintGraph(modality_, obs_config_, std::move(obs),
                         std::move(segs), std::move(gt));
}

void ConstraintGraph::Validate(bool noise_free) const {
  std::vector<int> seen(observations_.size(), 0);
  for (const Segment& seg : segments_) {
    if (seg.indices.empty() || seg.indices.size() != seg.arc_labels.size()) {
      Fail(ErrorCode::kInvalidArgument, "malformed segment");
    }
    if (seg.arc_labels.front() != 0.0) {
      Fail(ErrorCode::kInvalidArgument, "segment labels must start at 0");
    }
    for (std::size_t i = 0; i < seg.indices.size(); ++i) {
      const std::size_t idx = seg.indices[i];
      if (idx >= observations_.size() || seen[idx]++) {
        Fail(ErrorCode::kInvalidArgument,
             "observation index missing or repeated across segments");
      }
      if (i > 0 && !(seg.arc_labels[i] > seg.arc_labels[i - 1])) {
        Fail(ErrorCode::kInvalidArgument, "arc labels not strictly increasing");
      }
    }
    if (noise_free && has_ground_truth()) {
      for (std::size_t i = 0; i < seg.indices.size(); ++i) {
        for (std::size_t j = i + 1; j < seg.indices.size(); ++j) {
          const double gt_dist = (gt_positions_[seg.indices[i]] -
                                  gt_positions_[seg.indices[j]])
                                     .norm();
          const double label = std::abs(seg.arc_labels[i] - seg.arc_labels[j]);
          if (std::abs(gt_dist - label) > 1e-9) {
            Fail(ErrorCode::kInvalidArgument,
                 "label difference disagrees with ground-truth distance");
          }
        }
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    Fail(ErrorCode::kInvalidArgument, "observation not covered by a segment");
  }
}

double ApplyOdometryNoise(double c, const NoiseConfig& cfg, Rng& stream) {
  if (c < 0.0) Fail(ErrorCode::kInvalidArgument, "distance must be >= 0");
  if (cfg.w < 0.0) Fail(ErrorCode::kInvalidArgument, "noise factor w < 0");
  // Always draw so that the stream position does not depend on w.
  const double z = std::normal_distribution<double>(0.0, 1.0)(stream);
  return std::max(0.0, c + cfg.w * c * z);
}

Eigen::VectorXd ObserveLandmarks(const env::Environment2D& env, const Vec2& p,
                                 double d_max) {
  const auto& landmarks = env.landmarks();
  if (landmarks.empty()) {
    Fail(ErrorCode::kNoLandmarks, "environment has no landmarks");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(landmarks.size()));
  for (std::size_t k = 0; k < landmarks.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] =
        std::min((landmarks[k] - p).norm(), d_max);
  }
  return out;
}

Observation ObserveLidar(const env::Environment2D& env, const Vec2& p,
                         double heading, int n_beams, double max_range) {
  if (!env.occupancy()) {
    Fail(ErrorCode::kInvalidArgument, "lidar needs an occupancy grid");
  }
  if (n_beams < 1) Fail(ErrorCode::kInvalidArgument, "n_beams must be >= 1");
  const double two_pi = 2.0 * kPi;
  double h = std::fmod(heading, two_pi);
  if (h < 0.0) h += two_pi;
  Observation obs;
  obs.heading = h;
  obs.values.resize(2 * n_beams);
  for (int j = 0; j < n_beams; ++j) {
    const double local = two_pi * j / n_beams;
    const double world = h + local;
    const Vec2 dir(std::cos(world), std::sin(world));
    const double r = env::RayCast(*env.occupancy(), p, dir, max_range);
    obs.values[2 * j] = r * std::cos(local);
    obs.values[2 * j + 1] = r * std::sin(local);
  }
  return obs;
}

std::vector<int> SampleHeadingIndices(int orientations, int sample,
                                      Rng& stream) {
  if (orientations < 1 || sample < 1 || sample > orientations) {
    Fail(ErrorCode::kInvalidArgument, "need 1 <= sample <= orientations");
  }
  std::vector<int> grid(orientations);
  std::iota(grid.begin(), grid.end(), 0);
  // Partial Fisher-Yates.
  for (int i = 0; i < sample; ++i) {
    std::uniform_int_distribution<int> pick(i, orientations - 1);
    std::swap(grid[i], grid[pick(stream)]);
  }
  grid.resize(sample);
  return grid;
}

std::vector<Observation> OrientationVariants(const env::Environment2D& env,
                                             const Vec2& p,
                                             const ObservationConfig& cfg,
                                             int sample, Rng& stream) {
  std::vector<Observation> out;
  for (int r : SampleHeadingIndices(cfg.orientations, sample, stream)) {
    out.push_back(ObserveLidar(env, p, 2.0 * kPi * r / cfg.orientations,
                               cfg.n_beams, cfg.max_range));
  }
  return out;
}

Observation Observe(const env::Environment2D& env, const Vec2& p,
                    const ObservationConfig& cfg, Rng& heading_stream) {
  if (cfg.modality == Modality::kLandmarks) {
    return {ObserveLandmarks(env, p, cfg.d_max), 0.0};
  }
  return OrientationVariants(env, p, cfg, 1, heading_stream).front();
}

ConstraintGraph CollectDense(const env::Environment2D& env,
                             const DenseConfig& cfg,
                             const ObservationConfig& obs_cfg,
                             const NoiseConfig& noise, std::uint64_t seed) {
  if (!(cfg.spacing > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "spacing must be positive");
  }
  if (cfg.segments <= 0 && cfg.sample_budget == 0) {
    Fail(ErrorCode::kInvalidArgument, "need a segment count or sample budget");
  }
  if (cfg.sample_budget == 1) {
    Fail(ErrorCode::kInvalidArgument, "sample budget must be >= 2");
  }
  Rng rng = MakeRng(seed);
  Rng noise_rng = MakeRng(noise.seed);
  Rng heading_rng = MakeRng(obs_cfg.heading_seed);

  std::vector<Observation> observations;
  std::vector<Segment> segments;
  std::vector<Vec2> gt;
  Vec2 pos = RandomFreePosition(env, rng);

  auto done = [&] {
    if (cfg.segments > 0 && static_cast<int>(segments.size()) >= cfg.segments) {
      return true;
    }
    return cfg.sample_budget > 0 && observations.size() + 2 > cfg.sample_budget;
  };

  while (!done()) {
    Vec2 dir;
    long steps = 0;
    for (int attempt = 0; attempt < kRetryCap && steps < 1; ++attempt) {
      const double theta = Uniform(rng, 0.0, 2.0 * kPi);
      dir = Vec2(std::cos(theta), std::sin(theta));
      const double free = FreeLength(env, pos, dir);
      steps = static_cast<long>(std::floor(free / cfg.spacing + 1e-9));
      // Guard the last sample against landing on the far side of an edge.
      while (steps > 0 && !env.IsFree(pos + (steps * cfg.spacing) * dir)) {
        --steps;
      }
    }
    if (steps < 1) {
      Fail(ErrorCode::kStuck, "no heading admits a step from the current "
                              "position");
    }
    if (cfg.sample_budget > 0) {
      const long room =
          static_cast<long>(cfg.sample_budget - observations.size()) - 1;
      steps = std::min(steps, room);
    }

    Segment seg;
    LabelAccumulator labels(noise, noise_rng);
    for (long k = 0; k <= steps; ++k) {
      const Vec2 p = pos + (k * cfg.spacing) * dir;
      seg.indices.push_back(observations.size());
      seg.arc_labels.push_back(labels.Next(k, cfg.spacing));
      observations.push_back(Observe(env, p, obs_cfg, heading_rng));
      gt.push_back(p);
    }
    pos = gt.back();
    segments.push_back(std::move(seg));
  }
  return ConstraintGraph(obs_cfg.modality, obs_cfg, std::move(observations),
                         std::move(segments), std::move(gt));
}

ConstraintGraph CollectEndpoint(const env::Environment2D& env,
                                std::size_t count,
                                const ObservationConfig& obs_cfg,
                                const NoiseConfig& noise, std::uint64_t seed) {
  if (count < 2) Fail(ErrorCode::kInvalidArgument, "need at least 2 positions");
  Rng rng = MakeRng(seed);
  Rng noise_rng = MakeRng(noise.seed);
  Rng heading_rng = MakeRng(obs_cfg.heading_seed);

  std::vector<Vec2> waypoints{RandomFreePosition(env, rng)};
  while (waypoints.size() < count) {
    bool found = false;
    for (int attempt = 0; attempt < kRetryCap; ++attempt) {
      const Vec2 q = RandomFreePosition(env, rng);
      if (env::SegmentClear(env, waypoints.back(), q)) {
        waypoints.push_back(q);
        found = true;
        break;
      }
    }
    if (!found) {
      Fail(ErrorCode::kRetryExhausted, "no clear next waypoint within cap");
    }
  }

  // Each leg is its own two-sample segment. Interior waypoints are observed
  // once as the end of one leg and once as the start of the next, so every
  // record belongs to exactly one segment.
  std::vector<Observation> observations;
  std::vector<Vec2> gt;
  std::vector<Segment> segments;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    Segment seg;
    const double c = (waypoints[i + 1] - waypoints[i]).norm();
    seg.indices = {observations.size(), observations.size() + 1};
    seg.arc_labels = {0.0, ApplyOdometryNoise(c, noise, noise_rng)};
    for (std::size_t k : {i, i + 1}) {
      observations.push_back(Observe(env, waypoints[k], obs_cfg, heading_rng));
      gt.push_back(waypoints[k]);
    }
    segments.push_back(std::move(seg));
  }
  return ConstraintGraph(obs_cfg.modality, obs_cfg, std::move(observations),
                         std::move(segments), std::move(gt));
}

LidarRenderer::LidarRenderer(std::shared_ptr<const env::Environment2D> env,
                             const ConstraintGraph& graph)
    : env_(std::move(env)),
      cfg_(graph.obs_config()),
      positions_(graph.ground_truth(GroundTruthAccess::Grant())) {
  if (!env_ || !env_->occupancy()) {
    Fail(ErrorCode::kInvalidArgument, "lidar renderer needs an occupancy grid");
  }
  if (positions_.size() != graph.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "lidar renderer needs the collection positions");
  }
}

Eigen::VectorXd LidarRenderer::Render(std::size_t index,
                                      int heading_index) const {
  const double heading = 2.0 * kPi * heading_index / cfg_.orientations;
  return ObserveLidar(*env_, positions_.at(index), heading, cfg_.n_beams,
                      cfg_.max_range)
      .values;
}

void SaveDataset(const ConstraintGraph& graph, const DatasetHeader& header,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  const ObservationConfig& oc = graph.obs_config();
  nlohmann::json h;
  h["schema_version"] = kDatasetSchemaVersion;
  h["modality"] = ModalityName(graph.modality());
  h["env_reference"] = header.env_reference;
  h["config"] = nlohmann::json::parse(header.config_echo);
  h["seed"] = header.seed;
  h["N"] = graph.size();
  h["L"] = graph.segments().size();
  h["observation"] = {
      {"d_max", std::isfinite(oc.d_max) ? nlohmann::json(oc.d_max)
                                        : nlohmann::json(nullptr)},
      {"n_beams", oc.n_beams},
      {"max_range", oc.max_range},
      {"orientations", oc.orientations},
      {"orientation_samples", oc.orientation_samples},
      {"heading_seed", oc.heading_seed}};
  out << h.dump() << '\n';

  std::vector<std::size_t> segment_of(graph.size());
  std::vector<double> label_of(graph.size());
  for (std::size_t s = 0; s < graph.segments().size(); ++s) {
    const Segment& seg = graph.segments()[s];
    for (std::size_t i = 0; i < seg.indices.size(); ++i) {
      segment_of[seg.indices[i]] = s;
      label_of[seg.indices[i]] = seg.arc_labels[i];
    }
  }
  const auto& gt = graph.ground_truth(GroundTruthAccess::Grant());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Observation& o = graph.observations()[i];
    nlohmann::json r;
    r["index"] = i;
    r["segment_id"] = segment_of[i];
    r["arc_label"] = label_of[i];
    r["observation"] = {
        {"values", std::vector<double>(o.values.data(),
                                       o.values.data() + o.values.size())},
        {"heading", o.heading}};
    if (graph.has_ground_truth()) {
      r["gt_position"] = {gt[i].x(), gt[i].y()};
    } else {
      r["gt_position"] = nullptr;
    }
    out << r.dump() << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "failed writing " + path);
}

ConstraintGraph LoadDataset(const std::string& path, DatasetHeader* header) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kIo, "empty dataset " + path);
  try {
    const auto h = nlohmann::json::parse(line);
    if (h.at("schema_version").get<int>() != kDatasetSchemaVersion) {
      Fail(ErrorCode::kSchemaMismatch, "unsupported dataset schema");
    }
    ObservationConfig oc;
    oc.modality = ParseModality(h.at("modality").get<std::string>());
    const auto& ho = h.at("observation");
    oc.d_max = ho.at("d_max").is_null()
                   ? std::numeric_limits<double>::infinity()
                   : ho.at("d_max").get<double>();
    oc.n_beams = ho.at("n_beams").get<int>();
    oc.max_range = ho.at("max_range").get<double>();
    oc.orientations = ho.at("orientations").get<int>();
    oc.orientation_samples = ho.at("orientation_samples").get<int>();
    oc.heading_seed = ho.at("heading_seed").get<std::uint64_t>();
    const std::size_t n = h.at("N").get<std::size_t>();
    const std::size_t l = h.at("L").get<std::size_t>();
    if (header != nullptr) {
      header->env_reference = h.at("env_reference").get<std::string>();
      header->config_echo = h.at("config").dump();
      header->seed = h.at("seed").get<std::uint64_t>();
    }

    std::vector<Observation> observations(n);
    std::vector<Vec2> gt;
    std::vector<Segment> segments(l);
    bool have_gt = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) {
        Fail(ErrorCode::kSchemaMismatch, "dataset truncated");
      }
      const auto r = nlohmann::json::parse(line);
      if (r.at("index").get<std::size_t>() != i) {
        Fail(ErrorCode::kSchemaMismatch, "dataset records out of order");
      }
      const auto values = r.at("observation").at("values").get<std::vector<double>>();
      observations[i].values =
          Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
      observations[i].heading = r.at("observation").at("heading").get<double>();
      const std::size_t s = r.at("segment_id").get<std::size_t>();
      if (s >= l) Fail(ErrorCode::kSchemaMismatch, "segment id out of range");
      segments[s].indices.push_back(i);
      segments[s].arc_labels.push_back(r.at("arc_label").get<double>());
      if (r.at("gt_position").is_null()) {
        have_gt = false;
      } else {
        gt.emplace_back(r.at("gt_position").at(0).get<double>(),
                        r.at("gt_position").at(1).get<double>());
      }
    }
    if (!have_gt) gt.clear();
    ConstraintGraph graph(oc.modality, oc, std::move(observations),
                          std::move(segments), std::move(gt));
    return graph;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kSchemaMismatch,
         std::string("malformed dataset file: ") + e.what());
  }
}

}  // namespace wsloc::collect
