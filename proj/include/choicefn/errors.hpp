// Copyright 2026 The choicefn Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CHOICEFN_ERRORS_HPP_
#define CHOICEFN_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace choicefn {

enum class ErrorCode {
  kEmptyChoiceSet,
  kDuplicateObject,
  kIndexOutOfRange,
  kInvalidDataset,
  kInvalidArgument,
  kFactorizationFailure,
  kNonFinite,
  kInsufficientTail,
  kDegenerateWeights,
  kTieDetected,
  kMajorityTie,
  kDomainViolation,
  kNoPositives,
  kNoNegatives,
  kSchemaMismatch,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this type; `code()` is stable
// and is what the CLI serializes into its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace choicefn

#endif  // CHOICEFN_ERRORS_HPP_
