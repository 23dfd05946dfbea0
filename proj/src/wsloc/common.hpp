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

#ifndef WSLOC_COMMON_HPP_
#define WSLOC_COMMON_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace wsloc {

using Vec2 = Eigen::Vector2d;
// Point sets are stored one point per column.
using Points2 = Eigen::Matrix2Xd;

// Every failure the library can report. The numeric values are mirrored in
// the C API header and must stay stable.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kInvalidConfig = 2,
  kIo = 3,
  kSchemaMismatch = 4,
  kOutOfBounds = 10,
  kOriginOccupied = 11,
  kNonUnitDirection = 12,
  kDisconnectedFreeSpace = 13,
  kRetryExhausted = 20,
  kStuck = 21,
  kNoLandmarks = 22,
  kDimensionMismatch = 30,
  kStaleCache = 31,
  kShapeMismatch = 40,
  kEmptyPairSet = 41,
  kBatchTooSmall = 42,
  kSingularNormalEquations = 50,
  kDegenerateGeometry = 51,
  kEmptyTrainingSet = 52,
  kDegenerateCloud = 60,
  kLengthMismatch = 61,
  kSampleBudgetExceeded = 62,
  kNonFiniteLoss = 70,
  kInternal = 99,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

using Rng = std::mt19937_64;

// Builds an independent stream from a named seed plus optional salts
// (epoch number, sweep index, ...).
inline Rng MakeRng(std::uint64_t seed,
                   std::initializer_list<std::uint64_t> salts = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  for (std::uint64_t s : salts) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

inline double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace wsloc

#endif  // WSLOC_COMMON_HPP_
