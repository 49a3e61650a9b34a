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

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "choicefn/dataset.hpp"
#include "choicefn/errors.hpp"
#include "test_util.hpp"

namespace choicefn {
namespace {

ChoiceDataset minimal() {
  ChoiceDataset ds;
  ds.objects.features = Eigen::MatrixXd{{0.0}, {1.0}};
  ds.observations.push_back({{0, 1}, {0}});
  return ds;
}

ErrorCode code_of(const ChoiceDataset& ds) {
  try {
    validate_dataset(ds);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "dataset unexpectedly valid";
  return ErrorCode::kIo;
}

TEST(ValidateDataset, AcceptsMinimalDataset) {
  EXPECT_NO_THROW(validate_dataset(minimal()));
}

TEST(ValidateDataset, RejectsBrokenInvariants) {
  auto ds = minimal();
  ds.observations[0].chosen.clear();
  EXPECT_EQ(code_of(ds), ErrorCode::kEmptyChoiceSet);

  ds = minimal();
  ds.objects.features(1, 0) = 0.0;
  EXPECT_EQ(code_of(ds), ErrorCode::kDuplicateObject);

  ds = minimal();
  ds.observations[0].set = {0, 2};
  EXPECT_EQ(code_of(ds), ErrorCode::kIndexOutOfRange);

  ds = minimal();
  ds.observations[0].chosen = {1, 1};
  EXPECT_THROW(validate_dataset(ds), Error);

  ds = minimal();
  ds.observations[0].set = {0};
  EXPECT_THROW(validate_dataset(ds), Error);

  ds = minimal();
  ds.observations.clear();
  EXPECT_THROW(validate_dataset(ds), Error);
}

TEST(EncodePairs, SmallExamples) {
  ChoiceDataset ds;
  ds.objects.features = Eigen::MatrixXd{{0.0}, {1.0}, {2.0}, {3.0}, {4.0}};
  ds.observations.push_back({{0, 1, 2}, {0, 1}});
  auto enc = encode_pairs(ds);
  ASSERT_EQ(enc.incomparability_pairs.size(), 1u);
  ASSERT_EQ(enc.rejection_groups.size(), 1u);
  EXPECT_EQ(enc.rejection_groups[0].rejected, 2);
  EXPECT_EQ(enc.rejection_groups[0].chosen, (std::vector<Index>{0, 1}));

  ds.observations = {{{0, 1, 2, 3, 4}, {3, 0}}};
  enc = encode_pairs(ds);
  EXPECT_EQ(enc.incomparability_pairs.size(), 1u);
  EXPECT_EQ(enc.rejection_groups.size(), 3u);

  ds.observations = {{{0, 1}, {0}}};
  enc = encode_pairs(ds);
  EXPECT_TRUE(enc.incomparability_pairs.empty());
  ASSERT_EQ(enc.rejection_groups.size(), 1u);
  EXPECT_EQ(enc.rejection_groups[0].rejected, 1);
}

std::set<Index> as_set(const std::vector<Index>& v) { return {v.begin(), v.end()}; }

TEST(EncodePairs, RoundTripAndCountsOnRandomDatasets) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto ds = testing::random_dataset(rng, 12, 2, 1 + trial % 7, 6);
    const auto enc = encode_pairs(ds);
    std::size_t pairs = 0;
    std::size_t groups = 0;
    ASSERT_EQ(enc.num_observations(), ds.observations.size());
    for (std::size_t k = 0; k < ds.observations.size(); ++k) {
      const auto& obs = ds.observations[k];
      const auto [chosen, rejected] = decode_observation(enc, k);
      EXPECT_EQ(as_set(chosen), as_set(obs.chosen));
      EXPECT_EQ(as_set(rejected), as_set(obs.rejected()));
      const std::size_t c = obs.chosen.size();
      pairs += c * (c - 1) / 2;
      groups += obs.set.size() - c;
      const auto& span = enc.observation_spans[k];
      EXPECT_EQ(span.pair_end - span.pair_begin, c * (c - 1) / 2);
      EXPECT_EQ(span.group_end - span.group_begin, obs.set.size() - c);
    }
    EXPECT_EQ(enc.incomparability_pairs.size(), pairs);
    EXPECT_EQ(enc.rejection_groups.size(), groups);
  }
}

TEST(DatasetJson, RoundTripsExactly) {
  std::mt19937_64 rng(5);
  const auto ds = testing::random_dataset(rng, 9, 3, 20, 5);
  const auto back = dataset_from_json(nlohmann::json::parse(dataset_to_json(ds).dump()));
  EXPECT_EQ(back.objects.features, ds.objects.features);
  ASSERT_EQ(back.observations.size(), ds.observations.size());
  for (std::size_t k = 0; k < ds.observations.size(); ++k) {
    EXPECT_EQ(back.observations[k].set, ds.observations[k].set);
    EXPECT_EQ(back.observations[k].chosen, ds.observations[k].chosen);
  }
}

TEST(DatasetJson, MissingFileIsIoError) {
  try {
    load_dataset("/nonexistent/choicefn.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(CompactDataset, DropsUnreferencedRowsAndRemaps) {
  ChoiceDataset ds;
  ds.objects.features = Eigen::MatrixXd{{0.0}, {1.0}, {2.0}, {3.0}};
  ds.observations.push_back({{3, 1}, {3}});
  const auto c = compact_dataset(ds);
  EXPECT_EQ(c.kept, (std::vector<Index>{1, 3}));
  EXPECT_EQ(c.dataset.objects.size(), 2);
  const auto& obs = c.dataset.observations[0];
  for (std::size_t i = 0; i < obs.set.size(); ++i) {
    EXPECT_EQ(c.kept[static_cast<std::size_t>(obs.set[i])], ds.observations[0].set[i]);
  }
  EXPECT_EQ(c.kept[static_cast<std::size_t>(obs.chosen[0])], 3);
}

}  // namespace
}  // namespace choicefn
