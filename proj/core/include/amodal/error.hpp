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
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace amodal {

enum class ErrorCode {
  kRunSumMismatch,
  kDimensionMismatch,
  kDegeneratePolygon,
  kParseError,
  kValidationError,
  kIoError,
  kConfigError,
  kNoValidPlacement,
  kImageIdMismatch,
  kShapeMismatch,
  kGraphCycle,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the toolkit; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Violation {
  long long annotation_id = -1;  // -1 when the violation is not tied to one annotation
  long long image_id = -1;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

}  // namespace amodal
