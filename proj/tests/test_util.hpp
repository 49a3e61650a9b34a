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

// Shared helpers for the test binaries: random datasets and finite
// differences. Nothing here calls into the code under test except to build
// inputs.

#ifndef CHOICEFN_TESTS_TEST_UTIL_HPP_
#define CHOICEFN_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "choicefn/dataset.hpp"

namespace choicefn::testing {

/// t distinct objects with c uniform features and m random observations with
/// |A| in [2, max_set] and a random non-empty chosen subset.
inline ChoiceDataset random_dataset(std::mt19937_64& rng, Index t, Index c,
                                    std::size_t m, std::size_t max_set) {
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  ChoiceDataset ds;
  ds.objects.features.resize(t, c);
  for (Index i = 0; i < t; ++i) {
    for (Index j = 0; j < c; ++j) ds.objects.features(i, j) = unit(rng);
  }
  std::vector<Index> all(static_cast<std::size_t>(t));
  std::iota(all.begin(), all.end(), Index{0});
  const std::size_t cap = std::min<std::size_t>(max_set, all.size());
  std::uniform_int_distribution<std::size_t> size_dist(2, cap);
  for (std::size_t k = 0; k < m; ++k) {
    std::shuffle(all.begin(), all.end(), rng);
    ChoiceObservation obs;
    obs.set.assign(all.begin(), all.begin() + static_cast<long>(size_dist(rng)));
    std::uniform_int_distribution<std::size_t> chosen_dist(1, obs.set.size());
    const std::size_t n_chosen = chosen_dist(rng);
    std::vector<Index> pick = obs.set;
    std::shuffle(pick.begin(), pick.end(), rng);
    obs.chosen.assign(pick.begin(), pick.begin() + static_cast<long>(n_chosen));
    ds.observations.push_back(std::move(obs));
  }
  return ds;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Index rows,
                                     Index cols, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

/// Central differences of f at x with step h.
inline Eigen::VectorXd central_difference(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd plus = x;
    Eigen::VectorXd minus = x;
    plus[i] += h;
    minus[i] -= h;
    g[i] = (f(plus) - f(minus)) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|b_i|, floor).
inline double max_relative_error(const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b, double floor) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst,
                     std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  }
  return worst;
}

}  // namespace choicefn::testing

#endif  // CHOICEFN_TESTS_TEST_UTIL_HPP_
