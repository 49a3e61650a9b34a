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

#include "choicefn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "choicefn/errors.hpp"
#include "choicefn/random.hpp"

namespace choicefn {

namespace {

bool contains(const std::vector<Index>& v, Index x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

void check_aligned(std::size_t predicted, std::size_t truth) {
  if (predicted != truth) {
    throw Error(ErrorCode::kSchemaMismatch,
                std::to_string(predicted) + " predictions for " +
                    std::to_string(truth) + " observations");
  }
}

}  // namespace

EvalReport report_from_counts(long tp, long tn, long fp, long fn) {
  if (tp + fn == 0) {
    throw Error(ErrorCode::kNoPositives, "no truly chosen objects; TPR undefined");
  }
  if (tn + fp == 0) {
    throw Error(ErrorCode::kNoNegatives, "no truly rejected objects; TNR undefined");
  }
  EvalReport r;
  r.tp = tp;
  r.tn = tn;
  r.fp = fp;
  r.fn = fn;
  r.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.tnr = static_cast<double>(tn) / static_cast<double>(tn + fp);
  r.a_mean = 0.5 * (r.tpr + r.tnr);
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(tp + tn + fp + fn);
  return r;
}

EvalReport a_mean(const std::vector<std::vector<Index>>& predicted,
                  const ChoiceDataset& truth) {
  check_aligned(predicted.size(), truth.observations.size());
  long tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const auto& obs = truth.observations[k];
    for (Index v : predicted[k]) {
      if (!contains(obs.set, v)) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "prediction " + std::to_string(k) + " names object " +
                        std::to_string(v) + " outside its set");
      }
    }
    for (Index v : obs.set) {
      const bool is_chosen = contains(obs.chosen, v);
      const bool said_chosen = contains(predicted[k], v);
      if (is_chosen && said_chosen) ++tp;
      if (is_chosen && !said_chosen) ++fn;
      if (!is_chosen && said_chosen) ++fp;
      if (!is_chosen && !said_chosen) ++tn;
    }
  }
  return report_from_counts(tp, tn, fp, fn);
}

PairOutcome pair_outcome(const std::vector<Index>& set,
                         const std::vector<Index>& chosen) {
  if (set.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "pair outcome needs |A| = 2");
  }
  const bool first = contains(chosen, set[0]);
  const bool second = contains(chosen, set[1]);
  if (first && second) return PairOutcome::kIncomparable;
  if (first) return PairOutcome::kFirstWins;
  if (second) return PairOutcome::kSecondWins;
  throw Error(ErrorCode::kEmptyChoiceSet, "pair has no chosen object");
}

double pairwise_accuracy(const std::vector<std::vector<Index>>& predicted,
                         const ChoiceDataset& truth) {
  check_aligned(predicted.size(), truth.observations.size());
  if (predicted.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no test observations");
  }
  long hits = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const auto& obs = truth.observations[k];
    if (pair_outcome(obs.set, predicted[k]) == pair_outcome(obs.set, obs.chosen)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

DataSplit split_dataset(const ChoiceDataset& dataset, double train_fraction,
                        std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train fraction must be in (0, 1)");
  }
  const std::size_t m = dataset.observations.size();
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(m)));
  if (n_train == 0 || n_train >= m) {
    throw Error(ErrorCode::kInvalidArgument,
                "split leaves the training or test part empty");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  // Fisher-Yates with an explicit draw so the permutation depends only on
  // the generator, not on the standard library's shuffle.
  for (std::size_t i = m - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  DataSplit out;
  out.train_rows.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  out.test_rows.assign(order.begin() + static_cast<long>(n_train), order.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  out.train.objects = dataset.objects;
  out.test.objects = dataset.objects;
  for (std::size_t k : out.train_rows) out.train.observations.push_back(dataset.observations[k]);
  for (std::size_t k : out.test_rows) out.test.observations.push_back(dataset.observations[k]);
  return out;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
  nlohmann::json j = {{"a_mean", report.a_mean}, {"accuracy", report.accuracy},
                      {"tpr", report.tpr},       {"tnr", report.tnr},
                      {"tp", report.tp},         {"tn", report.tn},
                      {"fp", report.fp},         {"fn", report.fn}};
  if (!report.breakdown.empty()) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& [label, sub] : report.breakdown) {
      nlohmann::json entry = eval_report_to_json(sub);
      entry["label"] = label;
      parts.push_back(std::move(entry));
    }
    j["breakdown"] = std::move(parts);
  }
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& json) {
  try {
    EvalReport r = report_from_counts(json.at("tp").get<long>(), json.at("tn").get<long>(),
                                      json.at("fp").get<long>(), json.at("fn").get<long>());
    if (json.contains("breakdown")) {
      for (const auto& entry : json.at("breakdown")) {
        r.breakdown.emplace_back(entry.at("label").get<std::string>(),
                                 eval_report_from_json(entry));
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch,
                std::string("malformed evaluation report: ") + e.what());
  }
}

std::vector<MetricSummary> aggregate_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "nothing to aggregate");
  }
  const std::vector<std::pair<std::string, double EvalReport::*>> metrics = {
      {"a_mean", &EvalReport::a_mean},
      {"accuracy", &EvalReport::accuracy},
      {"tpr", &EvalReport::tpr},
      {"tnr", &EvalReport::tnr}};
  std::vector<MetricSummary> out;
  const double n = static_cast<double>(reports.size());
  for (const auto& [name, field] : metrics) {
    MetricSummary s;
    s.metric = name;
    s.count = static_cast<int>(reports.size());
    for (const auto& r : reports) s.mean += r.*field;
    s.mean /= n;
    if (reports.size() > 1) {
      double ss = 0.0;
      for (const auto& r : reports) ss += (r.*field - s.mean) * (r.*field - s.mean);
      s.std = std::sqrt(ss / (n - 1.0));
    }
    out.push_back(s);
  }
  return out;
}

std::string summaries_to_csv(const std::vector<MetricSummary>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "metric,mean,std,count\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << r.mean << ',' << r.std << ',' << r.count << '\n';
  }
  return out.str();
}

}  // namespace choicefn
