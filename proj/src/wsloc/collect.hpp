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

#ifndef WSLOC_COLLECT_HPP_
#define WSLOC_COLLECT_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wsloc/common.hpp"
#include "wsloc/env.hpp"

namespace wsloc::collect {

enum class Modality { kLandmarks, kLidar };

std::string ModalityName(Modality m);
Modality ParseModality(const std::string& name);

// Landmark observations hold M distances. Lidar observations hold the scan
// flattened as (x0, y0, x1, y1, ...) in the sensor frame, ordered by beam.
struct Observation {
  Eigen::VectorXd values;
  double heading = 0.0;
};

struct ObservationConfig {
  Modality modality = Modality::kLandmarks;
  double d_max = std::numeric_limits<double>::infinity();
  int n_beams = 256;
  double max_range = 10.0;
  // Size R of the heading grid {2*pi*r/R}.
  int orientations = 100;
  // Headings drawn per position and training epoch.
  int orientation_samples = 5;
  std::uint64_t heading_seed = 0;

  int InputDim(std::size_t landmark_count) const {
    return modality == Modality::kLandmarks ? static_cast<int>(landmark_count)
                                            : 2 * n_beams;
  }
};

enum class NoiseModel { kIncrement, kPair };

struct NoiseConfig {
  double w = 0.0;
  NoiseModel model = NoiseModel::kIncrement;
  std::uint64_t seed = 0;
};

struct Segment {
  std::vector<std::size_t> indices;
  // Encoder distance from the segment start; starts at 0.
  std::vector<double> arc_labels;
};

// Token required to read ground-truth positions. Only evaluation, baselines
// that attach positions to samples, dataset I/O and the privileged supervised
// trainer request one.
class GroundTruthAccess {
 public:
  static GroundTruthAccess Grant() { return GroundTruthAccess(); }

 private:
  GroundTruthAccess() = default;
};

class ConstraintGraph {
 public:
  ConstraintGraph(Modality modality, ObservationConfig obs_config,
                  std::vector<Observation> observations,
                  std::vector<Segment> segments,
                  std::vector<Vec2> gt_positions);

  Modality modality() const { return modality_; }
  const ObservationConfig& obs_config() const { return obs_config_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return observations_.size(); }
  int InputDim() const;

  bool has_ground_truth() const { return !gt_positions_.empty(); }
  const std::vector<Vec2>& ground_truth(GroundTruthAccess) const {
    return gt_positions_;
  }
  // Copy with positions removed, as a weakly-supervised consumer sees it.
  ConstraintGraph WithoutGroundTruth() const;

  // Keeps `n` samples: segments in shuffled order, whole segments first,
  // the last one truncated to its first samples.
  ConstraintGraph Prefix(std::size_t n, std::uint64_t shuffle_seed) const;

  // Checks structural invariants; with `noise_free`, also that label
  // differences equal ground-truth distances.
  void Validate(bool noise_free) const;

 private:
  Modality modality_;
  ObservationConfig obs_config_;
  std::vector<Observation> observations_;
  std::vector<Segment> segments_;
  std::vector<Vec2> gt_positions_;
};

double ApplyOdometryNoise(double c, const NoiseConfig& cfg, Rng& stream);

Eigen::VectorXd ObserveLandmarks(const env::Environment2D& env, const Vec2& p,
                                 double d_max);

Observation ObserveLidar(const env::Environment2D& env, const Vec2& p,
                         double heading, int n_beams, double max_range);

// `sample` distinct indices from {0..R-1}.
std::vector<int> SampleHeadingIndices(int orientations, int sample,
                                      Rng& stream);

std::vector<Observation> OrientationVariants(const env::Environment2D& env,
                                             const Vec2& p,
                                             const ObservationConfig& cfg,
                                             int sample, Rng& stream);

Observation Observe(const env::Environment2D& env, const Vec2& p,
                    const ObservationConfig& cfg, Rng& heading_stream);

struct DenseConfig {
  // Stop after this many segments (0: no limit).
  int segments = 128;
  // Stop after this many samples (0: no limit); the final segment is cut.
  std::size_t sample_budget = 0;
  double spacing = 0.02;
};

ConstraintGraph CollectDense(const env::Environment2D& env,
                             const DenseConfig& cfg,
                             const ObservationConfig& obs_cfg,
                             const NoiseConfig& noise, std::uint64_t seed);

ConstraintGraph CollectEndpoint(const env::Environment2D& env,
                                std::size_t count,
                                const ObservationConfig& obs_cfg,
                                const NoiseConfig& noise, std::uint64_t seed);

// Re-renders lidar scans at any grid heading for the positions of a graph.
// Holds the positions privately; callers only see scans.
class LidarRenderer {
 public:
  LidarRenderer(std::shared_ptr<const env::Environment2D> env,
                const ConstraintGraph& graph);

  Eigen::VectorXd Render(std::size_t index, int heading_index) const;
  int orientations() const { return cfg_.orientations; }

 private:
  std::shared_ptr<const env::Environment2D> env_;
  ObservationConfig cfg_;
  std::vector<Vec2> positions_;
};

// JSON Lines dataset file: one header object, then one record per
// observation in index order.
struct DatasetHeader {
  std::string env_reference;
  std::string config_echo = "{}";
  std::uint64_t seed = 0;
};

void SaveDataset(const ConstraintGraph& graph, const DatasetHeader& header,
                 const std::string& path);
ConstraintGraph LoadDataset(const std::string& path,
                            DatasetHeader* header = nullptr);

}  // namespace wsloc::collect

#endif  // WSLOC_COLLECT_HPP_
