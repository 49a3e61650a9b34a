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


// Independent reference implementations used by the unit tests and the
// acceptance binary. They follow the textbook definitions literally and share
// no code with the library.

#ifndef CHOICEFN_TESTS_ORACLES_HPP_
#define CHOICEFN_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "choicefn/dataset.hpp"
#include "choicefn/likelihood.hpp"

namespace choicefn::oracle {

inline double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// log prod_i Phi((u_i(o) - u_i(v)) / sigma).
inline double log_dom(const Eigen::MatrixXd& u, Index o, Index v, double sigma) {
  double lp = 0.0;
  for (Index i = 0; i < u.cols(); ++i) lp += std::log(phi((u(o, i) - u(v, i)) / sigma));
  return lp;
}

inline double clamp01(double f) {
  return std::clamp(f, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

/// log(1 - exp(x)) for x < 0, picking the form that keeps the digits.
inline double log_one_minus_exp(double x) {
  return x > -std::log(2.0) ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

/// Factors written with expm1 so that 1 - p keeps its digits when p is close
/// to 0 or 1.
inline double observation_log_lik(const ChoiceObservation& obs, const Eigen::MatrixXd& u,
                                  double sigma) {
  double total = 0.0;
  for (std::size_t a = 0; a < obs.chosen.size(); ++a) {
    for (std::size_t b = a + 1; b < obs.chosen.size(); ++b) {
      const Index o = obs.chosen[a], v = obs.chosen[b];
      const double f = -std::expm1(log_dom(u, o, v, sigma)) - std::exp(log_dom(u, v, o, sigma));
      total += std::log(clamp01(f));
    }
  }
  for (Index v : obs.rejected()) {
    double log_survive = 0.0;
    for (Index o : obs.chosen) log_survive += log_one_minus_exp(log_dom(u, o, v, sigma));
    total += std::log(clamp01(-std::expm1(log_survive)));
  }
  return total;
}

inline double dataset_log_lik(const ChoiceDataset& ds, const Eigen::MatrixXd& u, double sigma) {
  double total = 0.0;
  for (const auto& obs : ds.observations) total += observation_log_lik(obs, u, sigma);
  return total;
}

/// Rows of `utils` that no other row beats weakly everywhere and strictly
/// somewhere, by a double loop.
inline std::vector<Index> undominated(const Eigen::MatrixXd& utils) {
  std::vector<Index> out;
  for (Index v = 0; v < utils.rows(); ++v) {
    bool beaten = false;
    for (Index o = 0; o < utils.rows() && !beaten; ++o) {
      if (o == v) continue;
      bool all_ge = true, some_gt = false;
      for (Index i = 0; i < utils.cols(); ++i) {
        all_ge = all_ge && utils(o, i) >= utils(v, i);
        some_gt = some_gt || utils(o, i) > utils(v, i);
      }
      beaten = all_ge && some_gt;
    }
    if (!beaten) out.push_back(v);
  }
  return out;
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& x) {
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) { ma += ra[i]; mb += rb[i]; }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace choicefn::oracle

#endif  // CHOICEFN_TESTS_ORACLES_HPP_
