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

#ifndef WSLOC_ENV_HPP_
#define WSLOC_ENV_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wsloc/common.hpp"

namespace wsloc::env {

struct Bounds {
  double xmin = -1.0;
  double xmax = 1.0;
  double ymin = -1.0;
  double ymax = 1.0;

  bool Contains(const Vec2& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
  double Width() const { return xmax - xmin; }
  double Height() const { return ymax - ymin; }
  double Diagonal() const;

  bool operator==(const Bounds&) const = default;
};

struct CellIndex {
  int row = 0;
  int col = 0;
  bool operator==(const CellIndex&) const = default;
};

// Row-major boolean occupancy. Row index grows with y, column index with x.
// A cell is solid over its full square; a point on a shared edge belongs to
// the cell on its +x / +y side.
class OccupancyGrid {
 public:
  OccupancyGrid(int rows, int cols, double cell_size, Vec2 origin,
                std::vector<std::uint8_t> cells);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double cell_size() const { return cell_size_; }
  const Vec2& origin() const { return origin_; }
  const std::vector<std::uint8_t>& cells() const { return cells_; }

  Bounds Footprint() const;
  bool InFootprint(const Vec2& p) const;
  // Cell containing p; the far footprint edges are folded into the last
  // row/column. Throws OutOfBounds outside the footprint.
  CellIndex CellOf(const Vec2& p) const;
  bool ValidCell(int row, int col) const {
    return row >= 0 && row < rows_ && col >= 0 && col < cols_;
  }
  bool Occupied(int row, int col) const {
    return cells_[static_cast<std::size_t>(row) * cols_ + col] != 0;
  }
  bool OccupiedAt(const Vec2& p) const {
    const CellIndex c = CellOf(p);
    return Occupied(c.row, c.col);
  }
  Vec2 CellCenter(int row, int col) const;
  std::size_t FreeCellCount() const;

  bool operator==(const OccupancyGrid&) const = default;

 private:
  int rows_;
  int cols_;
  double cell_size_;
  Vec2 origin_;
  std::vector<std::uint8_t> cells_;
};

class Environment2D {
 public:
  Environment2D(Bounds bounds, std::vector<Vec2> landmarks,
                std::optional<OccupancyGrid> occupancy = std::nullopt,
                std::uint64_t seed = 0);

  const Bounds& bounds() const { return bounds_; }
  const std::vector<Vec2>& landmarks() const { return landmarks_; }
  const std::optional<OccupancyGrid>& occupancy() const { return occupancy_; }
  std::uint64_t seed() const { return seed_; }

  // True when p is inside the bounds and not inside an occupied cell.
  bool IsFree(const Vec2& p) const;

  bool operator==(const Environment2D&) const = default;

 private:
  Bounds bounds_;
  std::vector<Vec2> landmarks_;
  std::optional<OccupancyGrid> occupancy_;
  std::uint64_t seed_;
};

double RayCast(const OccupancyGrid& grid, const Vec2& origin,
               const Vec2& direction, double max_range);

bool SegmentClear(const OccupancyGrid* grid, const Vec2& p, const Vec2& q);
inline bool SegmentClear(const Environment2D& env, const Vec2& p,
                         const Vec2& q) {
  return SegmentClear(env.occupancy() ? &*env.occupancy() : nullptr, p, q);
}

// Distance from p along direction until the bounds are left.
double DistanceToBoundsExit(const Bounds& bounds, const Vec2& p,
                            const Vec2& direction);

Environment2D GenerateLandmarkEnv(const Bounds& bounds, int count,
                                  std::uint64_t seed);

// Axis-aligned block of cells, inclusive of row0/col0, exclusive of
// row0+rows / col0+cols.
struct CellRect {
  int row0 = 0;
  int col0 = 0;
  int rows = 1;
  int cols = 1;
};

struct RoomSpec {
  int rows = 64;
  int cols = 64;
  double cell_size = 0.1;
  Vec2 origin = Vec2::Zero();
  int wall_thickness = 1;
  std::vector<CellRect> obstacles;
  // Additional obstacles placed uniformly at random; a placement that would
  // disconnect free space is redrawn.
  int random_obstacles = 0;
  int obstacle_min_cells = 3;
  int obstacle_max_cells = 8;
};

Environment2D GenerateRoomEnv(const RoomSpec& spec, std::uint64_t seed);

std::string EnvironmentToJson(const Environment2D& env);
Environment2D EnvironmentFromJson(const std::string& text);
void SaveEnvironment(const Environment2D& env, const std::string& path);
Environment2D LoadEnvironment(const std::string& path);

}  // namespace wsloc::env

#endif  // WSLOC_ENV_HPP_
