// Copyright 2026 The Amodal Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "amodal/error.hpp"

namespace amodal {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRunSumMismatch: return "RunSumMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kNoValidPlacement: return "NoValidPlacement";
    case ErrorCode::kImageIdMismatch: return "ImageIdMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kGraphCycle: return "GraphCycle";
  }
  return "Unknown";
}

namespace {

std::string summarize(const std::vector<Violation>& violations) {
  std::string text = std::to_string(violations.size()) + " violation(s)";
  for (const auto& v : violations) {
    text += "\n  ";
    if (v.annotation_id >= 0) text += "annotation " + std::to_string(v.annotation_id) + ": ";
    else if (v.image_id >= 0) text += "image " + std::to_string(v.image_id) + ": ";
    text += v.message;
  }
  return text;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(ErrorCode::kValidationError, summarize(violations)),
      violations_(std::move(violations)) {}

}  // namespace amodal
