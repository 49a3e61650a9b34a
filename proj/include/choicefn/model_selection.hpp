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

// Pareto-smoothed importance-sampling leave-one-out (PSIS-LOO) and the
// forward scan over the latent dimension that uses it.
//
// For observation k and posterior draws u^(s) the raw importance ratios are
// 1 / p(z_k | u^(s)). Their largest M values are replaced by quantiles of a
// generalized Pareto distribution fitted to the exceedances over the cut
// point, everything is truncated at the largest raw ratio, and
//
//   p(z_k | z_-k) ~= sum_s w_s p(z_k | u^(s)) / sum_s w_s.
//
// All ratio arithmetic stays in log space.

#ifndef CHOICEFN_MODEL_SELECTION_HPP_
#define CHOICEFN_MODEL_SELECTION_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "choicefn/dataset.hpp"
#include "choicefn/variational.hpp"

namespace choicefn {

inline constexpr int kDefaultLooSamples = 4000;
/// k-hat above this marks an observation's estimate as unreliable.
inline constexpr double kKhatThreshold = 0.7;

struct GpdFit {
  double k = 0.0;      // shape
  double sigma = 0.0;  // scale
};

/// Zhang-Stephens profile posterior-mean fit of a generalized Pareto
/// distribution with location 0 to positive exceedances sorted ascending,
/// with the weakly informative shape prior used by PSIS.
GpdFit fit_gpd(std::span<const double> sorted_exceedances);

/// Quantile function of GPD(k, sigma) at probability p in (0, 1).
double gpd_quantile(double p, double k, double sigma);

/// Tail size M = min(ceil(0.2 S), ceil(3 sqrt S)).
int psis_tail_size(std::size_t n_samples);

struct GpdTailFit {
  double khat = 0.0;
  double sigma = 0.0;
  /// Input log weights with the tail smoothed and every value truncated at
  /// the largest raw log weight. Same order and offset as the input.
  std::vector<double> log_weights;
  /// Positions of the smoothed tail, in increasing weight order.
  std::vector<std::size_t> tail;
};

/// Smooths the upper tail of a vector of log importance weights. The cut
/// point is the (S - M)-th order statistic and the tail is every weight
/// strictly above it. Throws Error{kDegenerateWeights} if all weights agree
/// within 1e-12 and Error{kInsufficientTail} if fewer than 5 weights lie
/// above the cut point.
GpdTailFit fit_gpd_tail(std::span<const double> log_weights);

struct LooResult {
  double phi = 0.0;
  std::vector<double> elpd;  // per observation; phi is their sum
  std::vector<double> khat;  // per observation
  int n_samples = 0;
  std::uint64_t seed = 0;
  /// Some k-hat exceeds kKhatThreshold.
  bool unreliable = false;
  /// Some observation had constant or tied-tail weights and was not smoothed;
  /// its k-hat is reported as 0.
  bool degenerate = false;
  std::vector<char> degenerate_observations;

  double max_khat() const;
  int bad_khat_count() const;
};

/// PSIS-LOO for a model fitted on `dataset` (same object rows). Posterior
/// draws come from the variational posterior at the training objects.
LooResult psis_loo(const FittedModel& model, const ChoiceDataset& dataset,
                   int n_samples = kDefaultLooSamples, std::uint64_t seed = 0,
                   int threads = 1);

/// PSIS-LOO from a precomputed m x S matrix of log p(z_k | u^(s)).
LooResult psis_loo_from_log_lik(const Eigen::MatrixXd& log_lik);

struct SelectionConfig {
  FitConfig fit;
  int d_max = 5;
  int loo_samples = kDefaultLooSamples;
  /// Stop after the first strict decrease of phi.
  bool early_stop = false;
};

struct SelectionRow {
  int d = 0;
  bool failed = false;
  std::string error;  // set when failed
  double phi = 0.0;
  double max_khat = 0.0;
  int n_bad_khat = 0;
  LooResult loo;
  FitReport report;
};

struct SelectionResult {
  int best_d = 0;
  std::vector<SelectionRow> rows;
  std::optional<FittedModel> best_model;
};

/// Fits d = 1..d_max and keeps the d with the largest phi. A d whose fit or
/// LOO fails is recorded and skipped; throws the last error if every d
/// fails.
SelectionResult select_latent_dim(const ChoiceDataset& dataset,
                                  const SelectionConfig& config);

}  // namespace choicefn

#endif  // CHOICEFN_MODEL_SELECTION_HPP_
