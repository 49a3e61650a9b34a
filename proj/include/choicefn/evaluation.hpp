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

// Metrics for predicted choice sets and observation-level data splits.
// The positive class of A-mean is "chosen".

#ifndef CHOICEFN_EVALUATION_HPP_
#define CHOICEFN_EVALUATION_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "choicefn/dataset.hpp"

namespace choicefn {

struct EvalReport {
  double a_mean = 0.0;    // (tpr + tnr) / 2
  double accuracy = 0.0;  // (tp + tn) / all object decisions
  double tpr = 0.0;
  double tnr = 0.0;
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;
  /// Optional labelled breakdown, e.g. one entry per seed.
  std::vector<std::pair<std::string, EvalReport>> breakdown;
};

/// Per-object comparison of predicted against true chosen sets, one entry
/// per observation of `truth`. Throws Error{kSchemaMismatch} on misaligned
/// input, Error{kNoPositives} / Error{kNoNegatives} when a rate is
/// undefined.
EvalReport a_mean(const std::vector<std::vector<Index>>& predicted,
                  const ChoiceDataset& truth);

/// Recomputes the rates from stored counts.
EvalReport report_from_counts(long tp, long tn, long fp, long fn);

enum class PairOutcome { kFirstWins, kSecondWins, kIncomparable };

/// Outcome of a two-object set from its chosen subset, in `set` order.
PairOutcome pair_outcome(const std::vector<Index>& set,
                         const std::vector<Index>& chosen);

/// Fraction of binary test observations whose predicted outcome equals the
/// truth. Throws Error{kInvalidArgument} if an observation is not binary.
double pairwise_accuracy(const std::vector<std::vector<Index>>& predicted,
                         const ChoiceDataset& truth);

struct DataSplit {
  ChoiceDataset train;
  ChoiceDataset test;
  std::vector<std::size_t> train_rows;  // observation indices
  std::vector<std::size_t> test_rows;
};

/// Observation-level split keeping llround(fraction * m) observations for
/// training; the object table is shared. A sparsity level is the same
/// number. Deterministic given `seed`.
DataSplit split_dataset(const ChoiceDataset& dataset, double train_fraction,
                        std::uint64_t seed);

nlohmann::json eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& json);

struct MetricSummary {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single report
  int count = 0;
};

/// Mean and sample standard deviation of a_mean, accuracy, tpr and tnr.
std::vector<MetricSummary> aggregate_reports(const std::vector<EvalReport>& reports);

/// CSV with header metric,mean,std,count.
std::string summaries_to_csv(const std::vector<MetricSummary>& rows);

}  // namespace choicefn

#endif  // CHOICEFN_EVALUATION_HPP_
