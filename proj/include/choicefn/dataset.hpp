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

#ifndef CHOICEFN_DATASET_HPP_
#define CHOICEFN_DATASET_HPP_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace choicefn {

using Index = std::ptrdiff_t;

/// The ground set: one row per object, one column per feature.
struct ObjectTable {
  Eigen::MatrixXd features;

  Index size() const { return features.rows(); }
  Index num_features() const { return features.cols(); }
};

/// One offered set A together with the chosen subset C(A).
struct ChoiceObservation {
  std::vector<Index> set;
  std::vector<Index> chosen;

  /// A \ C(A), in the order the elements appear in `set`.
  std::vector<Index> rejected() const;
};

struct ChoiceDataset {
  ObjectTable objects;
  std::vector<ChoiceObservation> observations;
};

/// Checks every structural invariant and returns the dataset unchanged.
/// Throws Error{kEmptyChoiceSet | kDuplicateObject | kIndexOutOfRange |
/// kInvalidDataset}.
const ChoiceDataset& validate_dataset(const ChoiceDataset& dataset);

/// A chosen object together with the rejected one it must not dominate.
struct RejectionGroup {
  Index rejected;
  std::vector<Index> chosen;
};

struct ObservationSpan {
  std::size_t pair_begin = 0;
  std::size_t pair_end = 0;
  std::size_t group_begin = 0;
  std::size_t group_end = 0;
};

/// Flattened likelihood structure. Every incomparability pair and every
/// rejection group is exactly one factor of the choice likelihood; the
/// per-observation spans let callers evaluate observations separately.
struct PairEncoding {
  std::vector<std::pair<Index, Index>> incomparability_pairs;
  std::vector<RejectionGroup> rejection_groups;
  std::vector<ObservationSpan> observation_spans;

  std::size_t num_observations() const { return observation_spans.size(); }
};

PairEncoding encode_pairs(const ChoiceDataset& dataset);

/// Rebuilds the (chosen, rejected) partition of observation `k` from the
/// encoding alone. Always possible because |A| >= 2: either something is
/// rejected (groups carry C) or |C| >= 2 (pairs carry C).
std::pair<std::vector<Index>, std::vector<Index>> decode_observation(
    const PairEncoding& encoding, std::size_t k);

/// Restricts the object table to the objects referenced by at least one
/// observation. `kept[i]` is the original index of the i-th kept row.
struct CompactDataset {
  ChoiceDataset dataset;
  std::vector<Index> kept;
};

CompactDataset compact_dataset(const ChoiceDataset& dataset);

nlohmann::json dataset_to_json(const ChoiceDataset& dataset);
ChoiceDataset dataset_from_json(const nlohmann::json& json);
ChoiceDataset load_dataset(const std::string& path);
void save_dataset(const ChoiceDataset& dataset, const std::string& path);

}  // namespace choicefn

#endif  // CHOICEFN_DATASET_HPP_
