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

#include "wsloc/common.hpp"

namespace wsloc {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kOriginOccupied: return "OriginOccupied";
    case ErrorCode::kNonUnitDirection: return "NonUnitDirection";
    case ErrorCode::kDisconnectedFreeSpace: return "DisconnectedFreeSpace";
    case ErrorCode::kRetryExhausted: return "RetryExhausted";
    case ErrorCode::kStuck: return "Stuck";
    case ErrorCode::kNoLandmarks: return "NoLandmarks";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kStaleCache: return "StaleCache";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyPairSet: return "EmptyPairSet";
    case ErrorCode::kBatchTooSmall: return "BatchTooSmall";
    case ErrorCode::kSingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kDegenerateCloud: return "DegenerateCloud";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kSampleBudgetExceeded: return "SampleBudgetExceeded";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace wsloc
