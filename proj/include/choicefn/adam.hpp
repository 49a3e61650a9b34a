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

#ifndef CHOICEFN_ADAM_HPP_
#define CHOICEFN_ADAM_HPP_

#include <cmath>

#include <Eigen/Dense>

namespace choicefn {

struct AdamOptions {
  double learning_rate = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam (Kingma & Ba) written for maximization.
class Adam {
 public:
  Adam(Eigen::Index size, AdamOptions options)
      : options_(options),
        m_(Eigen::VectorXd::Zero(size)),
        v_(Eigen::VectorXd::Zero(size)) {}

  template <typename Params, typename Grad>
  void ascend(Params&& params, const Grad& grad) {
    ++step_;
    m_ = options_.beta1 * m_ + (1.0 - options_.beta1) * grad;
    v_ = options_.beta2 * v_ + (1.0 - options_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(options_.beta1, step_);
    const double c2 = 1.0 - std::pow(options_.beta2, step_);
    params.array() += options_.learning_rate * (m_.array() / c1) /
                      ((v_.array() / c2).sqrt() + options_.epsilon);
  }

  int step() const { return step_; }

 private:
  AdamOptions options_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  int step_ = 0;
};

}  // namespace choicefn

#endif  // CHOICEFN_ADAM_HPP_
