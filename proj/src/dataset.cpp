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

#include "choicefn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "choicefn/errors.hpp"

namespace choicefn {

std::vector<Index> ChoiceObservation::rejected() const {
  std::vector<Index> out;
  out.reserve(set.size());
  for (Index v : set) {
    if (std::find(chosen.begin(), chosen.end(), v) == chosen.end()) {
      out.push_back(v);
    }
  }
  return out;
}

namespace {

// Lexicographic row order, so exact duplicates end up adjacent.
struct RowLess {
  const Eigen::MatrixXd* m;
  bool operator()(Index a, Index b) const {
    for (Index c = 0; c < m->cols(); ++c) {
      const double x = (*m)(a, c);
      const double y = (*m)(b, c);
      if (x < y) return true;
      if (y < x) return false;
    }
    return false;
  }
};

void check_objects(const ObjectTable& objects) {
  const auto& x = objects.features;
  if (x.rows() < 2 || x.cols() < 1) {
    throw Error(ErrorCode::kInvalidDataset,
                "object table needs at least 2 rows and 1 feature");
  }
  if (!x.allFinite()) {
    throw Error(ErrorCode::kInvalidDataset, "object features must be finite");
  }
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), RowLess{&x});
  for (std::size_t i = 1; i < order.size(); ++i) {
    if ((x.row(order[i - 1]).array() == x.row(order[i]).array()).all()) {
      throw Error(ErrorCode::kDuplicateObject,
                  "objects " + std::to_string(order[i - 1]) + " and " +
                      std::to_string(order[i]) + " have identical features");
    }
  }
}

void check_observation(const ChoiceObservation& obs, Index t, std::size_t k) {
  const std::string where = "observation " + std::to_string(k) + ": ";
  if (obs.chosen.empty()) {
    throw Error(ErrorCode::kEmptyChoiceSet, where + "chosen set is empty");
  }
  if (obs.set.size() < 2) {
    throw Error(ErrorCode::kInvalidDataset,
                where + "offered set needs at least 2 objects");
  }
  std::unordered_set<Index> members;
  for (Index v : obs.set) {
    if (v < 0 || v >= t) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  where + "object index " + std::to_string(v) +
                      " out of range");
    }
    if (!members.insert(v).second) {
      throw Error(ErrorCode::kInvalidDataset,
                  where + "repeated object " + std::to_string(v));
    }
  }
  std::unordered_set<Index> chosen;
  for (Index v : obs.chosen) {
    if (v < 0 || v >= t) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  where + "chosen index " + std::to_string(v) +
                      " out of range");
    }
    if (!members.contains(v)) {
      throw Error(ErrorCode::kInvalidDataset,
                  where + "chosen object " + std::to_string(v) +
                      " is not in the offered set");
    }
    if (!chosen.insert(v).second) {
      throw Error(ErrorCode::kInvalidDataset,
                  where + "repeated chosen object " + std::to_string(v));
    }
  }
}

}  // namespace

const ChoiceDataset& validate_dataset(const ChoiceDataset& dataset) {
  check_objects(dataset.objects);
  if (dataset.observations.empty()) {
    throw Error(ErrorCode::kInvalidDataset, "dataset has no observations");
  }
  for (std::size_t k = 0; k < dataset.observations.size(); ++k) {
    check_observation(dataset.observations[k], dataset.objects.size(), k);
  }
  return dataset;
}

PairEncoding encode_pairs(const ChoiceDataset& dataset) {
  PairEncoding enc;
  enc.observation_spans.reserve(dataset.observations.size());
  for (const auto& obs : dataset.observations) {
    ObservationSpan span;
    span.pair_begin = enc.incomparability_pairs.size();
    span.group_begin = enc.rejection_groups.size();
    for (std::size_t a = 0; a < obs.chosen.size(); ++a) {
      for (std::size_t b = a + 1; b < obs.chosen.size(); ++b) {
        enc.incomparability_pairs.emplace_back(obs.chosen[a], obs.chosen[b]);
      }
    }
    for (Index v : obs.rejected()) {
      enc.rejection_groups.push_back({v, obs.chosen});
    }
    span.pair_end = enc.incomparability_pairs.size();
    span.group_end = enc.rejection_groups.size();
    enc.observation_spans.push_back(span);
  }
  return enc;
}

std::pair<std::vector<Index>, std::vector<Index>> decode_observation(
    const PairEncoding& encoding, std::size_t k) {
  const auto& span = encoding.observation_spans.at(k);
  std::vector<Index> chosen;
  std::vector<Index> rejected;
  if (span.group_begin != span.group_end) {
    chosen = encoding.rejection_groups[span.group_begin].chosen;
  } else if (span.pair_begin != span.pair_end) {
    const Index first = encoding.incomparability_pairs[span.pair_begin].first;
    chosen.push_back(first);
    for (std::size_t p = span.pair_begin; p < span.pair_end; ++p) {
      const auto& [a, b] = encoding.incomparability_pairs[p];
      if (a == first) chosen.push_back(b);
    }
  }
  for (std::size_t g = span.group_begin; g < span.group_end; ++g) {
    rejected.push_back(encoding.rejection_groups[g].rejected);
  }
  return {std::move(chosen), std::move(rejected)};
}

CompactDataset compact_dataset(const ChoiceDataset& dataset) {
  std::map<Index, Index> remap;
  for (const auto& obs : dataset.observations) {
    for (Index v : obs.set) remap.emplace(v, 0);
  }
  CompactDataset out;
  out.kept.reserve(remap.size());
  for (auto& [original, compact] : remap) {
    compact = static_cast<Index>(out.kept.size());
    out.kept.push_back(original);
  }
  const Index t = static_cast<Index>(out.kept.size());
  out.dataset.objects.features.resize(t, dataset.objects.num_features());
  for (Index i = 0; i < t; ++i) {
    out.dataset.objects.features.row(i) =
        dataset.objects.features.row(out.kept[static_cast<std::size_t>(i)]);
  }
  out.dataset.observations.reserve(dataset.observations.size());
  for (const auto& obs : dataset.observations) {
    ChoiceObservation mapped;
    for (Index v : obs.set) mapped.set.push_back(remap.at(v));
    for (Index v : obs.chosen) mapped.chosen.push_back(remap.at(v));
    out.dataset.observations.push_back(std::move(mapped));
  }
  return out;
}

nlohmann::json dataset_to_json(const ChoiceDataset& dataset) {
  nlohmann::json features = nlohmann::json::array();
  const auto& x = dataset.objects.features;
  for (Index i = 0; i < x.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < x.cols(); ++c) row.push_back(x(i, c));
    features.push_back(std::move(row));
  }
  nlohmann::json observations = nlohmann::json::array();
  for (const auto& obs : dataset.observations) {
    observations.push_back({{"set", obs.set}, {"chosen", obs.chosen}});
  }
  return {{"features", std::move(features)},
          {"observations", std::move(observations)}};
}

ChoiceDataset dataset_from_json(const nlohmann::json& json) {
  if (!json.is_object() || !json.contains("features") ||
      !json.contains("observations")) {
    throw Error(ErrorCode::kSchemaMismatch,
                "dataset JSON needs \"features\" and \"observations\"");
  }
  ChoiceDataset out;
  try {
    const auto& rows = json.at("features");
    const Index t = static_cast<Index>(rows.size());
    const Index c = t > 0 ? static_cast<Index>(rows.at(0).size()) : 0;
    out.objects.features.resize(t, c);
    for (Index i = 0; i < t; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (static_cast<Index>(row.size()) != c) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "feature row " + std::to_string(i) + " has wrong length");
      }
      for (Index j = 0; j < c; ++j) {
        out.objects.features(i, j) =
            row.at(static_cast<std::size_t>(j)).get<double>();
      }
    }
    for (const auto& obs : json.at("observations")) {
      out.observations.push_back(
          {obs.at("set").get<std::vector<Index>>(),
           obs.at("chosen").get<std::vector<Index>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch,
                std::string("malformed dataset JSON: ") + e.what());
  }
  return out;
}

ChoiceDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "dataset not found: " + path);
  nlohmann::json json;
  try {
    in >> json;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch,
                "cannot parse " + path + ": " + e.what());
  }
  return dataset_from_json(json);
}

void save_dataset(const ChoiceDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << dataset_to_json(dataset).dump() << '\n';
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyChoiceSet: return "EmptyChoiceSet";
    case ErrorCode::kDuplicateObject: return "DuplicateObject";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidDataset: return "InvalidDataset";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFactorizationFailure: return "FactorizationFailure";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kInsufficientTail: return "InsufficientTail";
    case ErrorCode::kDegenerateWeights: return "DegenerateWeights";
    case ErrorCode::kTieDetected: return "TieDetected";
    case ErrorCode::kMajorityTie: return "MajorityTie";
    case ErrorCode::kDomainViolation: return "DomainViolation";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kNoNegatives: return "NoNegatives";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace choicefn
