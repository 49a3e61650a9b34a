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

#ifndef CHOICEFN_KERNEL_HPP_
#define CHOICEFN_KERNEL_HPP_

#include <Eigen/Dense>

namespace choicefn {

inline constexpr double kDefaultJitter = 1e-6;
inline constexpr double kMaxJitter = 1e-2;

/// Unit-scale RBF kernel with one lengthscale per feature.
struct KernelParams {
  Eigen::VectorXd lengthscales;
  double jitter = kDefaultJitter;

  /// Throws Error{kInvalidArgument} unless all lengthscales and the jitter
  /// are positive and finite.
  void validate() const;
};

double rbf_ard(const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& y,
               const KernelParams& params);

/// k_p((a, b), (c, d)) = k(a,c) - k(a,d) - k(c,b) + k(b,d): the covariance of
/// u(a) - u(b) and u(c) - u(d) under a GP prior on u.
double preference_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                         const Eigen::Ref<const Eigen::VectorXd>& b,
                         const Eigen::Ref<const Eigen::VectorXd>& c,
                         const Eigen::Ref<const Eigen::VectorXd>& d,
                         const KernelParams& params);

/// Noise-free cross-covariance, rows of `a` against rows of `b`.
Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const KernelParams& params);

/// Gram matrix K + jitter * I together with its lower Cholesky factor.
struct GramMatrix {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd lower;
  /// Jitter actually added; larger than requested if escalation kicked in.
  double jitter = 0.0;
};

/// Builds the regularized Gram matrix. Starts from `params.jitter` and
/// multiplies it by 10 up to kMaxJitter until the factorization succeeds;
/// throws Error{kFactorizationFailure} after that.
GramMatrix gram_matrix(const Eigen::MatrixXd& x, const KernelParams& params);

/// Lower Cholesky factor of an SPD matrix with the same escalation policy.
/// `jitter_used` receives the added diagonal (0 if none was needed).
Eigen::MatrixXd stable_cholesky(const Eigen::MatrixXd& a, double start_jitter,
                                double* jitter_used = nullptr);

}  // namespace choicefn

#endif  // CHOICEFN_KERNEL_HPP_
