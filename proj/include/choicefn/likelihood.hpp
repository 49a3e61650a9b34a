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

// Probit relaxation of Pareto-rationalized choice.
//
// For an observation (A, C) with rejected set R = A \ C and latent utilities
// u in R^{t x d}, the likelihood is a product of two kinds of factors:
//
//   incomparability, one per unordered pair {o, v} of C:
//       1 - P(o dom v) - P(v dom o)
//   rejection, one per v in R:
//       1 - prod_{o in C} (1 - P(o dom v))
//
// with P(o dom v) = prod_i Phi((u_i(o) - u_i(v)) / sigma). Everything is
// evaluated in log space; each factor is clamped to [eps, 1 - eps].

#ifndef CHOICEFN_LIKELIHOOD_HPP_
#define CHOICEFN_LIKELIHOOD_HPP_

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "choicefn/dataset.hpp"

namespace choicefn {

inline constexpr double kProbabilityClamp = 1e-12;
inline constexpr double kSigmaMin = 1e-4;

struct LikelihoodOptions {
  /// Clamp every factor to [kProbabilityClamp, 1 - kProbabilityClamp].
  /// Disabling it exposes the exact -inf limits.
  bool clamp = true;
};

/// prod_i Phi((o_i - v_i) / sigma).
double dominance_prob(const Eigen::Ref<const Eigen::VectorXd>& o_utils,
                      const Eigen::Ref<const Eigen::VectorXd>& v_utils,
                      double sigma);

double log_lik_observation(const PairEncoding& encoding, std::size_t k,
                           const Eigen::MatrixXd& u, double sigma,
                           LikelihoodOptions options = {});

/// Convenience overload that encodes a single observation on the fly.
double log_lik_observation(const ChoiceObservation& observation,
                           const Eigen::MatrixXd& u, double sigma,
                           LikelihoodOptions options = {});

/// One entry per observation, in dataset order.
Eigen::VectorXd log_lik_per_observation(const PairEncoding& encoding,
                                        const Eigen::MatrixXd& u, double sigma,
                                        LikelihoodOptions options = {});

/// Sum of per-observation terms, accumulated in observation order.
double log_lik_dataset(const PairEncoding& encoding, const Eigen::MatrixXd& u,
                       double sigma, LikelihoodOptions options = {});

double log_lik_dataset(const ChoiceDataset& dataset, const Eigen::MatrixXd& u,
                       double sigma, LikelihoodOptions options = {});

struct LikelihoodGradient {
  double value = 0.0;
  Eigen::MatrixXd d_u;  // t x d
  double d_sigma = 0.0;
};

/// Exact gradient of the clamped log-likelihood. Clamped factors contribute
/// zero gradient.
LikelihoodGradient grad_log_lik(const PairEncoding& encoding,
                                const Eigen::MatrixXd& u, double sigma);

/// Single-utility likelihood of one winner against a batch of losers under
/// the limit-of-discernibility model: prod_v Phi((u_o - u_v) / sigma).
double probit_product(double o_util, std::span<const double> rejected_utils,
                      double sigma);

/// Additive-noise batch likelihood
///   int prod_v Phi((u_o + w - u_v) / sigma) N(w; 0, sigma^2) dw
/// by Gauss-Hermite quadrature of the given order (>= 16).
double batch_likelihood(double o_util, std::span<const double> rejected_utils,
                        double sigma, int quadrature_order = 64);

}  // namespace choicefn

#endif  // CHOICEFN_LIKELIHOOD_HPP_
