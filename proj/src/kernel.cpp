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

#include "choicefn/kernel.hpp"

#include <cmath>
#include <string>

#include "choicefn/errors.hpp"

namespace choicefn {

void KernelParams::validate() const {
  if (lengthscales.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "kernel needs lengthscales");
  }
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "lengthscale " + std::to_string(i) + " must be positive");
    }
  }
  if (!(jitter > 0.0) || !std::isfinite(jitter)) {
    throw Error(ErrorCode::kInvalidArgument, "jitter must be positive");
  }
}

double rbf_ard(const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& y,
               const KernelParams& params) {
  const double r2 =
      ((x - y).array() / params.lengthscales.array()).square().sum();
  return std::exp(-0.5 * r2);
}

double preference_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                         const Eigen::Ref<const Eigen::VectorXd>& b,
                         const Eigen::Ref<const Eigen::VectorXd>& c,
                         const Eigen::Ref<const Eigen::VectorXd>& d,
                         const KernelParams& params) {
  return rbf_ard(a, c, params) - rbf_ard(a, d, params) -
         rbf_ard(c, b, params) + rbf_ard(b, d, params);
}

Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const KernelParams& params) {
  const Eigen::ArrayXd inv = params.lengthscales.array().inverse();
  const Eigen::MatrixXd as = a * inv.matrix().asDiagonal();
  const Eigen::MatrixXd bs = b * inv.matrix().asDiagonal();
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      k(i, j) = std::exp(-0.5 * (as.row(i) - bs.row(j)).squaredNorm());
    }
  }
  return k;
}

Eigen::MatrixXd stable_cholesky(const Eigen::MatrixXd& a, double start_jitter,
                                double* jitter_used) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    if (jitter_used != nullptr) *jitter_used = 0.0;
    return llt.matrixL();
  }
  for (double jitter = start_jitter; jitter <= kMaxJitter * (1 + 1e-9);
       jitter *= 10.0) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      if (jitter_used != nullptr) *jitter_used = jitter;
      return llt.matrixL();
    }
  }
  throw Error(ErrorCode::kFactorizationFailure,
              "Cholesky failed after jitter escalation to " +
                  std::to_string(kMaxJitter));
}

GramMatrix gram_matrix(const Eigen::MatrixXd& x, const KernelParams& params) {
  params.validate();
  const Eigen::MatrixXd k = cross_kernel(x, x, params);
  GramMatrix out;
  for (double jitter = params.jitter; jitter <= kMaxJitter * (1 + 1e-9);
       jitter *= 10.0) {
    out.matrix = k;
    out.matrix.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(out.matrix);
    if (llt.info() == Eigen::Success) {
      out.lower = llt.matrixL();
      out.jitter = jitter;
      return out;
    }
  }
  throw Error(ErrorCode::kFactorizationFailure,
              "Gram matrix not positive definite even with jitter " +
                  std::to_string(kMaxJitter) +
                  "; inputs are likely degenerate");
}

}  // namespace choicefn
