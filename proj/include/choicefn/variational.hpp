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

// Variational posterior over the latent utilities.
//
// Each latent dimension i has an independent GP prior N(0, K_i) at the
// training objects and a Gaussian posterior with 2t parameters:
//
//   mean        m_i = K_i nu_i
//   covariance  S_i = (K_i^{-1} + diag(lambda_i))^{-1}
//
// S_i is never formed from K_i^{-1}. With K_i = L L^T and
// C_i = I + L^T diag(lambda_i) L = L_C L_C^T, the factor R_i = L L_C^{-T}
// satisfies R_i R_i^T = S_i and is what samples are drawn through.

#ifndef CHOICEFN_VARIATIONAL_HPP_
#define CHOICEFN_VARIATIONAL_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "choicefn/dataset.hpp"
#include "choicefn/kernel.hpp"

namespace choicefn {

/// Unconstrained parameters: positivity of lambda, lengthscales and sigma
/// comes from the log parameterization.
struct VariationalState {
  std::vector<Eigen::VectorXd> nu;          // d entries of length t
  std::vector<Eigen::VectorXd> log_lambda;  // d entries of length t
  /// One entry when lengthscales are shared, otherwise one per dimension.
  std::vector<Eigen::VectorXd> log_lengthscales;
  double log_sigma = 0.0;

  int latent_dim() const { return static_cast<int>(nu.size()); }
  Eigen::Index num_objects() const { return nu.empty() ? 0 : nu[0].size(); }
  bool shared_lengthscales() const { return log_lengthscales.size() == 1; }
  /// Index into log_lengthscales used by latent dimension `i`.
  std::size_t kernel_of(int i) const {
    return shared_lengthscales() ? 0 : static_cast<std::size_t>(i);
  }
  double sigma() const;

  Eigen::VectorXd pack() const;
  /// Overwrites the parameters from a vector laid out like pack().
  void unpack(const Eigen::Ref<const Eigen::VectorXd>& flat);
  Eigen::Index size() const;
};

struct FitConfig {
  int iters = 5000;
  double learning_rate = 5e-3;
  int mc_samples = 64;
  std::uint64_t seed = 0;
  bool shared_lengthscales = true;
  double jitter = kDefaultJitter;
  int map_iters = 1000;
  double map_learning_rate = 0.05;
  double init_lengthscale = 1.0;
  double init_sigma = 0.5;
  int final_elbo_samples = 2048;
  /// Window and horizon of the convergence test on the ELBO trace.
  int smoothing_window = 100;
  int convergence_horizon = 500;
  double convergence_tol = 1e-4;
  /// Workers for the per-sample likelihood; 0 uses every core. Results do
  /// not depend on this value.
  int threads = 0;
};

struct FitReport {
  double final_elbo = 0.0;
  std::vector<double> elbo_trace;  // one Monte-Carlo estimate per iteration
  int iterations = 0;
  bool converged = false;
  /// Set when the iteration budget ran out before the convergence test held.
  bool max_iters_no_improvement = false;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Frozen posterior. Construction precomputes the Gram factors, posterior
/// means and sampling factors; afterwards the object is read-only.
class FittedModel {
 public:
  FittedModel() = default;
  FittedModel(Eigen::MatrixXd features, VariationalState state, double jitter,
              std::vector<Index> training_index = {});

  int latent_dim() const { return state_.latent_dim(); }
  Eigen::Index num_objects() const { return features_.rows(); }
  const Eigen::MatrixXd& features() const { return features_; }
  const VariationalState& state() const { return state_; }
  double jitter() const { return jitter_; }
  double sigma() const { return state_.sigma(); }
  KernelParams kernel(int dim) const;
  /// Original dataset row of each training object.
  const std::vector<Index>& training_index() const { return training_index_; }

  /// Posterior means at the training objects, t x d.
  const Eigen::MatrixXd& posterior_mean() const { return mean_; }
  /// R_i with R_i R_i^T = S_i.
  const Eigen::MatrixXd& covariance_factor(int dim) const {
    return factor_[static_cast<std::size_t>(dim)];
  }
  Eigen::MatrixXd posterior_covariance(int dim) const;
  const GramMatrix& gram(int dim) const {
    return gram_[state_.kernel_of(dim)];
  }

  /// Draws `n` joint samples of u(X); element s is t x d.
  std::vector<Eigen::MatrixXd> sample_posterior(int n, std::uint64_t seed) const;

  /// Maps a dataset whose rows include the training objects into this
  /// model's row space. Throws Error{kSchemaMismatch} if an observation
  /// references an object the model was not trained on.
  PairEncoding encode(const ChoiceDataset& dataset) const;

 private:
  Eigen::MatrixXd features_;
  VariationalState state_;
  double jitter_ = kDefaultJitter;
  std::vector<Index> training_index_;
  std::vector<GramMatrix> gram_;
  Eigen::MatrixXd mean_;
  std::vector<Eigen::MatrixXd> factor_;
};

struct MapInit {
  KernelParams kernel;
  double sigma = 0.5;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  /// Scale of the whitened random start; 0 starts exactly at u = 0.
  double start_scale = 0.1;
};

struct MapObjective {
  double value = 0.0;
  Eigen::MatrixXd d_u;
};

/// log p(D | u) + sum_i log N(u_i; 0, K), up to the constant -t d / 2 log 2pi.
MapObjective map_objective(const PairEncoding& encoding, const GramMatrix& gram,
                           const Eigen::MatrixXd& u, double sigma);

/// Maximizes map_objective by Adam in the whitened coordinates u_i = L a_i.
/// Throws Error{kNonFinite} if the gradient stops being finite.
Eigen::MatrixXd map_estimate(const ChoiceDataset& dataset, int latent_dim,
                             const MapInit& init, int max_iters);

struct ElboTerms {
  double value = 0.0;
  double expected_log_lik = 0.0;
  double kl = 0.0;
};

/// KL(N(K nu, S) || N(0, K)) for one latent dimension.
double kl_divergence(const GramMatrix& gram, const Eigen::VectorXd& nu,
                     const Eigen::VectorXd& log_lambda);

/// Monte-Carlo ELBO; deterministic given `seed`.
ElboTerms elbo(const VariationalState& state, const Eigen::MatrixXd& features,
               const PairEncoding& encoding, int mc_samples, std::uint64_t seed,
               double jitter = kDefaultJitter, int threads = 1);

/// ELBO estimate for fixed standard-normal draws (`noise[i]` is t x S for
/// dimension i) and its exact gradient with respect to state.pack().
std::pair<ElboTerms, Eigen::VectorXd> elbo_gradient(
    const VariationalState& state, const Eigen::MatrixXd& features,
    const PairEncoding& encoding, const std::vector<Eigen::MatrixXd>& noise,
    double jitter = kDefaultJitter, int threads = 1);

/// Same estimator as elbo_gradient without the backward pass.
ElboTerms elbo_value(const VariationalState& state,
                     const Eigen::MatrixXd& features,
                     const PairEncoding& encoding,
                     const std::vector<Eigen::MatrixXd>& noise,
                     double jitter = kDefaultJitter, int threads = 1);

/// MAP initialization followed by Adam on the ELBO. Objects that appear in no
/// observation are dropped before fitting.
std::pair<FittedModel, FitReport> fit(const ChoiceDataset& dataset,
                                      int latent_dim, const FitConfig& config);

/// Gradient of f(A) for symmetric A = L L^T given df/dL (lower part used).
Eigen::MatrixXd cholesky_backward(const Eigen::MatrixXd& lower,
                                  const Eigen::MatrixXd& d_lower);

}  // namespace choicefn

#endif  // CHOICEFN_VARIATIONAL_HPP_
