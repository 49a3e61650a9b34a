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

// JSON model files and fit reports. A model file stores the unconstrained
// parameters exactly (doubles round-trip through JSON), so a loaded model
// predicts bitwise like the one that was saved.

#ifndef CHOICEFN_MODEL_IO_HPP_
#define CHOICEFN_MODEL_IO_HPP_

#include <string>

#include <nlohmann/json.hpp>

#include "choicefn/variational.hpp"

namespace choicefn {

inline constexpr int kModelSchemaVersion = 1;

struct FitMetadata {
  std::uint64_t seed = 0;
  int iterations = 0;
  double final_elbo = 0.0;
  bool converged = false;
};

FitMetadata metadata_of(const FitReport& report);

nlohmann::json model_to_json(const FittedModel& model, const FitMetadata& meta);
/// Throws Error{kSchemaMismatch} on a malformed file or unknown version.
FittedModel model_from_json(const nlohmann::json& json,
                            FitMetadata* meta = nullptr);

void save_model(const FittedModel& model, const FitMetadata& meta,
                const std::string& path);
/// Throws Error{kIo} if the file cannot be read.
FittedModel load_model(const std::string& path, FitMetadata* meta = nullptr);

/// Report JSON; wall-clock time is included only when asked for, so that
/// reports of identical runs are byte-identical by default.
nlohmann::json fit_report_to_json(const FitReport& report,
                                  bool include_wall_clock = false);

/// Reads and parses a JSON file; kIo if missing, kSchemaMismatch if invalid.
nlohmann::json read_json_file(const std::string& path, const std::string& what);
/// Writes `json.dump(2)` plus a newline; kIo on failure.
void write_json_file(const nlohmann::json& json, const std::string& path);

}  // namespace choicefn

#endif  // CHOICEFN_MODEL_IO_HPP_
