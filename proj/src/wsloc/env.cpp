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

#include "wsloc/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace wsloc::env {
namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr int kSchemaVersion = 1;
constexpr int kPlacementRetries = 1000;

// Amanatides-Woo style walk over grid cells along origin + t * dir.
// Calls `visit(row, col, t_enter)` for every cell entered after the start
// cell while t_enter < t_stop; a `true` return stops the walk and yields
// t_enter. When the ray passes exactly through a grid vertex the two cells
// sharing that vertex with the current cell are visited as well, so the
// walk is symmetric under reversal.
template <typename Visit>
std::optional<double> Walk(const OccupancyGrid& grid, const Vec2& origin,
                           const Vec2& dir, CellIndex start, double t_stop,
                           bool stop_outside, Visit&& visit) {
  const double inf = std::numeric_limits<double>::infinity();
  const int step_x = dir.x() > 0 ? 1 : (dir.x() < 0 ? -1 : 0);
  const int step_y = dir.y() > 0 ? 1 : (dir.y() < 0 ? -1 : 0);
  const double cs = grid.cell_size();
  const Vec2& o = grid.origin();

  auto next_t_x = [&](int col) {
    if (step_x == 0) return inf;
    const double bx = o.x() + (col + (step_x > 0 ? 1 : 0)) * cs;
    return (bx - origin.x()) / dir.x();
  };
  auto next_t_y = [&](int row) {
    if (step_y == 0) return inf;
    const double by = o.y() + (row + (step_y > 0 ? 1 : 0)) * cs;
    return (by - origin.y()) / dir.y();
  };

  int row = start.row;
  int col = start.col;
  while (true) {
    const double tx = next_t_x(col);
    const double ty = next_t_y(row);
    const double t = std::min(tx, ty);
    if (!(t < t_stop)) return std::nullopt;
    const bool corner =
        std::isfinite(tx) && std::isfinite(ty) &&
        std::abs(tx - ty) <= 1e-12 * std::max(1.0, std::abs(t));
    if (corner) {
      if (grid.ValidCell(row, col + step_x) && visit(row, col + step_x, t)) {
        return t;
      }
      if (grid.ValidCell(row + step_y, col) && visit(row + step_y, col, t)) {
        return t;
      }
      row += step_y;
      col += step_x;
    } else if (tx < ty) {
      col += step_x;
    } else {
      row += step_y;
    }
    if (!grid.ValidCell(row, col)) {
      if (stop_outside) return std::nullopt;
      continue;
    }
    if (visit(row, col, t)) return t;
  }
}

bool FreeSpaceConnected(int rows, int cols,
                        const std::vector<std::uint8_t>& cells) {
  std::size_t free_total = 0;
  int first = -1;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i]) {
      ++free_total;
      if (first < 0) first = static_cast<int>(i);
    }
  }
  if (free_total == 0) return false;
  std::vector<std::uint8_t> seen(cells.size(), 0);
  std::deque<int> queue{first};
  seen[first] = 1;
  std::size_t reached = 0;
  while (!queue.empty()) {
    const int idx = queue.front();
    queue.pop_front();
    ++reached;
    const int r = idx / cols;
    const int c = idx % cols;
    const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& n : nbr) {
      if (n[0] < 0 || n[0] >= rows || n[1] < 0 || n[1] >= cols) continue;
      const int j = n[0] * cols + n[1];
      if (cells[j] || seen[j]) continue;
      seen[j] = 1;
      queue.push_back(j);
    }
  }
  return reached == free_total;
}

void FillRect(int rows, int cols, const CellRect& rect,
              std::vector<std::uint8_t>& cells) {
  for (int r = std::max(0, rect.row0);
       r < std::min(rows, rect.row0 + rect.rows); ++r) {
    for (int c = std::max(0, rect.col0);
         c < std::min(cols, rect.col0 + rect.cols); ++c) {
      cells[static_cast<std::size_t>(r) * cols + c] = 1;
    }
  }
}

}  // namespace

double Bounds::Diagonal() const { return std::hypot(Width(), Height()); }

OccupancyGrid::OccupancyGrid(int rows, int cols, double cell_size, Vec2 origin,
                             std::vector<std::uint8_t> cells)
    : rows_(rows),
      cols_(cols),
      cell_size_(cell_size),
      origin_(std::move(origin)),
      cells_(std::move(cells)) {
  if (rows_ <= 0 || cols_ <= 0 || !(cell_size_ > 0.0)) {
    Fail(ErrorCode::kInvalidArgument,
         "occupancy grid needs positive rows, cols and cell_size");
  }
  if (cells_.size() != static_cast<std::size_t>(rows_) * cols_) {
    Fail(ErrorCode::kInvalidArgument,
         "occupancy grid cell count does not match rows*cols");
  }
  for (auto& c : cells_) c = c ? 1 : 0;
}

Bounds OccupancyGrid::Footprint() const {
  return {origin_.x(), origin_.x() + cols_ * cell_size_, origin_.y(),
          origin_.y() + rows_ * cell_size_};
}

bool OccupancyGrid::InFootprint(const Vec2& p) const {
  return Footprint().Contains(p);
}

CellIndex OccupancyGrid::CellOf(const Vec2& p) const {
  if (!InFootprint(p)) {
    Fail(ErrorCode::kOutOfBounds, "point outside occupancy grid footprint");
  }
  int col = static_cast<int>(std::floor((p.x() - origin_.x()) / cell_size_));
  int row = static_cast<int>(std::floor((p.y() - origin_.y()) / cell_size_));
  col = std::clamp(col, 0, cols_ - 1);
  row = std::clamp(row, 0, rows_ - 1);
  return {row, col};
}

Vec2 OccupancyGrid::CellCenter(int row, int col) const {
  return origin_ + Vec2((col + 0.5) * cell_size_, (row + 0.5) * cell_size_);
}

std::size_t OccupancyGrid::FreeCellCount() const {
  return static_cast<std::size_t>(
      std::count(cells_.begin(), cells_.end(), std::uint8_t{0}));
}

Environment2D::Environment2D(Bounds bounds, std::vector<Vec2> landmarks,
                             std::optional<OccupancyGrid> occupancy,
                             std::uint64_t seed)
    : bounds_(bounds),
      landmarks_(std::move(landmarks)),
      occupancy_(std::move(occupancy)),
      seed_(seed) {
  if (!(bounds_.xmin < bounds_.xmax) || !(bounds_.ymin < bounds_.ymax)) {
    Fail(ErrorCode::kInvalidArgument, "environment bounds are empty");
  }
  for (const Vec2& m : landmarks_) {
    if (!bounds_.Contains(m)) {
      Fail(ErrorCode::kInvalidArgument, "landmark outside bounds");
    }
  }
  if (occupancy_ && !(occupancy_->Footprint() == bounds_)) {
    Fail(ErrorCode::kInvalidArgument,
         "occupancy footprint must cover the bounds exactly");
  }
}

bool Environment2D::IsFree(const Vec2& p) const {
  if (!bounds_.Contains(p)) return false;
  return !occupancy_ || !occupancy_->OccupiedAt(p);
}

double RayCast(const OccupancyGrid& grid, const Vec2& origin,
               const Vec2& direction, double max_range) {
  if (std::abs(direction.norm() - 1.0) > kUnitTolerance) {
    Fail(ErrorCode::kNonUnitDirection, "ray direction must be a unit vector");
  }
  if (!(max_range > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "max_range must be positive");
  }
  const CellIndex start = grid.CellOf(origin);
  if (grid.Occupied(start.row, start.col)) {
    Fail(ErrorCode::kOriginOccupied, "ray origin lies in an occupied cell");
  }
  const auto hit =
      Walk(grid, origin, direction, start, max_range, /*stop_outside=*/true,
           [&](int r, int c, double) { return grid.Occupied(r, c); });
  return hit ? std::max(0.0, *hit) : max_range;
}

bool SegmentClear(const OccupancyGrid* grid, const Vec2& p, const Vec2& q) {
  if (grid == nullptr) return true;
  const CellIndex a = grid->CellOf(p);
  const CellIndex b = grid->CellOf(q);
  if (grid->Occupied(a.row, a.col) || grid->Occupied(b.row, b.col)) {
    return false;
  }
  const double length = (q - p).norm();
  if (length == 0.0) return true;
  const Vec2 dir = (q - p) / length;
  const auto hit =
      Walk(*grid, p, dir, a, length, /*stop_outside=*/true,
           [&](int r, int c, double) { return grid->Occupied(r, c); });
  return !hit.has_value();
}

double DistanceToBoundsExit(const Bounds& bounds, const Vec2& p,
                            const Vec2& direction) {
  double t = std::numeric_limits<double>::infinity();
  if (direction.x() > 0) t = std::min(t, (bounds.xmax - p.x()) / direction.x());
  if (direction.x() < 0) t = std::min(t, (bounds.xmin - p.x()) / direction.x());
  if (direction.y() > 0) t = std::min(t, (bounds.ymax - p.y()) / direction.y());
  if (direction.y() < 0) t = std::min(t, (bounds.ymin - p.y()) / direction.y());
  return std::max(0.0, t);
}

Environment2D GenerateLandmarkEnv(const Bounds& bounds, int count,
                                  std::uint64_t seed) {
  if (count < 1) Fail(ErrorCode::kInvalidArgument, "need at least 1 landmark");
  Rng rng = MakeRng(seed);
  std::vector<Vec2> landmarks;
  landmarks.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double x = Uniform(rng, bounds.xmin, bounds.xmax);
    const double y = Uniform(rng, bounds.ymin, bounds.ymax);
    landmarks.emplace_back(x, y);
  }
  return Environment2D(bounds, std::move(landmarks), std::nullopt, seed);
}

Environment2D GenerateRoomEnv(const RoomSpec& spec, std::uint64_t seed) {
  if (spec.rows < 3 || spec.cols < 3 || !(spec.cell_size > 0.0) ||
      spec.wall_thickness < 0 || spec.obstacle_min_cells < 1 ||
      spec.obstacle_max_cells < spec.obstacle_min_cells ||
      spec.random_obstacles < 0) {
    Fail(ErrorCode::kInvalidArgument, "invalid room specification");
  }
  const int rows = spec.rows;
  const int cols = spec.cols;
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(rows) * cols, 0);
  const int w = spec.wall_thickness;
  FillRect(rows, cols, {0, 0, w, cols}, cells);
  FillRect(rows, cols, {rows - w, 0, w, cols}, cells);
  FillRect(rows, cols, {0, 0, rows, w}, cells);
  FillRect(rows, cols, {0, cols - w, rows, w}, cells);
  for (const CellRect& rect : spec.obstacles) FillRect(rows, cols, rect, cells);
  if (!FreeSpaceConnected(rows, cols, cells)) {
    Fail(ErrorCode::kDisconnectedFreeSpace,
         "room layout leaves free space disconnected");
  }

  Rng rng = MakeRng(seed);
  for (int k = 0; k < spec.random_obstacles; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      std::uniform_int_distribution<int> size(spec.obstacle_min_cells,
                                              spec.obstacle_max_cells);
      CellRect rect;
      rect.rows = size(rng);
      rect.cols = size(rng);
      const int max_row0 = rows - w - rect.rows;
      const int max_col0 = cols - w - rect.cols;
      if (max_row0 < w || max_col0 < w) continue;
      rect.row0 = std::uniform_int_distribution<int>(w, max_row0)(rng);
      rect.col0 = std::uniform_int_distribution<int>(w, max_col0)(rng);
      auto candidate = cells;
      FillRect(rows, cols, rect, candidate);
      if (FreeSpaceConnected(rows, cols, candidate)) {
        cells = std::move(candidate);
        placed = true;
      }
    }
    if (!placed) {
      Fail(ErrorCode::kRetryExhausted,
           "could not place random obstacle without disconnecting the room");
    }
  }

  OccupancyGrid grid(rows, cols, spec.cell_size, spec.origin, std::move(cells));
  const Bounds bounds = grid.Footprint();
  return Environment2D(bounds, {}, std::move(grid), seed);
}

std::string EnvironmentToJson(const Environment2D& env) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  const Bounds& b = env.bounds();
  j["bounds"] = {{"xmin", b.xmin}, {"xmax", b.xmax}, {"ymin", b.ymin},
                 {"ymax", b.ymax}};
  nlohmann::json landmarks = nlohmann::json::array();
  for (const Vec2& m : env.landmarks()) landmarks.push_back({m.x(), m.y()});
  j["landmarks"] = std::move(landmarks);
  if (env.occupancy()) {
    const OccupancyGrid& g = *env.occupancy();
    nlohmann::json cells = nlohmann::json::array();
    for (std::uint8_t c : g.cells()) cells.push_back(static_cast<int>(c));
    j["occupancy"] = {{"rows", g.rows()},
                      {"cols", g.cols()},
                      {"cell_size", g.cell_size()},
                      {"origin", {g.origin().x(), g.origin().y()}},
                      {"cells", std::move(cells)}};
  } else {
    j["occupancy"] = nullptr;
  }
  j["seed"] = env.seed();
  return j.dump();
}

Environment2D EnvironmentFromJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kIo, std::string("environment file is not JSON: ") +
                             e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      Fail(ErrorCode::kSchemaMismatch, "unsupported environment schema");
    }
    const auto& jb = j.at("bounds");
    Bounds b{jb.at("xmin").get<double>(), jb.at("xmax").get<double>(),
             jb.at("ymin").get<double>(), jb.at("ymax").get<double>()};
    std::vector<Vec2> landmarks;
    for (const auto& m : j.at("landmarks")) {
      landmarks.emplace_back(m.at(0).get<double>(), m.at(1).get<double>());
    }
    std::optional<OccupancyGrid> grid;
    if (!j.at("occupancy").is_null()) {
      const auto& g = j.at("occupancy");
      std::vector<std::uint8_t> cells;
      for (const auto& c : g.at("cells")) {
        cells.push_back(static_cast<std::uint8_t>(c.get<int>() != 0));
      }
      grid.emplace(g.at("rows").get<int>(), g.at("cols").get<int>(),
                   g.at("cell_size").get<double>(),
                   Vec2(g.at("origin").at(0).get<double>(),
                        g.at("origin").at(1).get<double>()),
                   std::move(cells));
    }
    return Environment2D(b, std::move(landmarks), std::move(grid),
                         j.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kSchemaMismatch,
         std::string("malformed environment file: ") + e.what());
  }
}

void SaveEnvironment(const Environment2D& env, const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << EnvironmentToJson(env) << '\n';
}

Environment2D LoadEnvironment(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return EnvironmentFromJson(buffer.str());
}

}  // namespace wsloc::env
