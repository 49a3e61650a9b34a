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

// Predictive distribution of the latent utilities at new objects, and the
// Monte-Carlo choice probabilities and choice-set predictions built on it.
//
// The training Gram matrix carries a jitter term. At a test input that is
// bitwise identical to a training input the same jitter is added to the
// cross-covariance, so predicting at the training inputs returns exactly the
// variational posterior N(m, S).

#ifndef CHOICEFN_PREDICTION_HPP_
#define CHOICEFN_PREDICTION_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "choicefn/dataset.hpp"
#include "choicefn/variational.hpp"

namespace choicefn {

inline constexpr int kDefaultPredictiveSamples = 1000;
/// Largest |A*| for exhaustive subset enumeration.
inline constexpr int kMaxExactSetSize = 12;

struct PredictiveGaussian {
  std::vector<Eigen::VectorXd> mean;        // d entries of length p
  std::vector<Eigen::MatrixXd> covariance;  // d entries, p x p

  int latent_dim() const { return static_cast<int>(mean.size()); }
  Eigen::Index size() const { return mean.empty() ? 0 : mean[0].size(); }

  /// `n` joint draws across the p points; element s is p x d. Each
  /// dimension is drawn through a Cholesky factor of its full covariance.
  std::vector<Eigen::MatrixXd> sample(int n, std::uint64_t seed) const;
};

/// Conditions each GP prior on the variational posterior at the training
/// objects: mean K*^T nu, covariance K** - K*^T (K + diag(lambda)^{-1})^{-1} K*.
/// Throws Error{kSchemaMismatch} on a feature-count mismatch and
/// Error{kInvalidArgument} on non-finite inputs.
PredictiveGaussian predict_latent(const FittedModel& model,
                                  const Eigen::MatrixXd& x_star);

/// How a sampled utility matrix scores a candidate choice set.
enum class ProbabilitySemantics {
  kRelaxed,    // the probit likelihood at the fitted sigma, unclamped
  kIndicator,  // 1 iff the set is exactly the sample's undominated set
};

/// Monte-Carlo estimate of P(C* | A*) under the predictive distribution.
/// `a_star` indexes rows of `x_star`; `c_star` is a non-empty subset of it.
double choice_probability(const FittedModel& model, const Eigen::MatrixXd& x_star,
                          const std::vector<Index>& a_star,
                          const std::vector<Index>& c_star, int n_samples,
                          std::uint64_t seed, ProbabilitySemantics semantics);

enum class SetPredictionMode {
  kMarginal,  // objects undominated in at least half of the samples
  kExact,     // most frequent undominated subset; |A*| <= kMaxExactSetSize
};

struct SetPredictionOptions {
  int n_samples = kDefaultPredictiveSamples;
  std::uint64_t seed = 0;
  SetPredictionMode mode = SetPredictionMode::kMarginal;
  /// Also report a probability for every non-empty subset of A*.
  bool subset_probabilities = false;
  ProbabilitySemantics subset_semantics = ProbabilitySemantics::kIndicator;
};

struct SubsetProbability {
  std::vector<Index> subset;  // rows of x_star
  double probability = 0.0;
};

struct SetPrediction {
  std::vector<Index> chosen;     // rows of x_star, in A* order
  std::vector<double> marginal;  // P(undominated) per member of A*
  std::vector<SubsetProbability> subsets;
};

SetPrediction predict_set(const FittedModel& model, const Eigen::MatrixXd& x_star,
                          const std::vector<Index>& a_star,
                          const SetPredictionOptions& options);

/// The chosen part of predict_set.
std::vector<Index> predict_choice_set(const FittedModel& model,
                                      const Eigen::MatrixXd& x_star,
                                      const std::vector<Index>& a_star,
                                      int n_samples, std::uint64_t seed,
                                      SetPredictionMode mode);

/// Bit j set iff row j of `utils` is strongly Pareto-undominated. Identical
/// rows do not dominate each other. At most 64 rows.
std::uint64_t undominated_mask(const Eigen::MatrixXd& utils);

}  // namespace choicefn

#endif  // CHOICEFN_PREDICTION_HPP_
