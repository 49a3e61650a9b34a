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


#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "choicefn/errors.hpp"
#include "choicefn/model_selection.hpp"
#include "choicefn/synthetic.hpp"

namespace choicefn {
namespace {

std::vector<double> log_exponential(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = std::log(e(rng));
  return out;
}

// Pareto(alpha) with unit scale by inversion: log w = -log(U) / alpha.
std::vector<double> log_pareto(std::size_t n, double alpha, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = -std::log(1.0 - u(rng)) / alpha;
  return out;
}

TEST(Gpd, QuantileClosedForms) {
  EXPECT_NEAR(gpd_quantile(0.75, 0.0, 2.0), -2.0 * std::log(0.25), 1e-14);
  EXPECT_NEAR(gpd_quantile(0.75, 0.5, 1.0), (std::pow(0.25, -0.5) - 1.0) / 0.5, 1e-14);
  EXPECT_EQ(psis_tail_size(4000), static_cast<int>(std::ceil(3.0 * std::sqrt(4000.0))));
  EXPECT_EQ(psis_tail_size(100), 20);
}

TEST(Gpd, RecoversShapeFromExactSamples) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double k : {0.1, 0.3, 0.6}) {
    std::vector<double> x(3000);
    for (auto& v : x) v = gpd_quantile(u(rng), k, 1.5);
    std::sort(x.begin(), x.end());
    const auto fit = fit_gpd(x);
    EXPECT_NEAR(fit.k, k, 0.1);
    EXPECT_NEAR(fit.sigma, 1.5, 0.2);
  }
  EXPECT_THROW(fit_gpd(std::vector<double>{1, 2, 3}), Error);
}

TEST(PsisTail, ExponentialWeightsHaveLightTail) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto fit = fit_gpd_tail(log_exponential(4000, seed));
    EXPECT_NEAR(fit.khat, 0.0, 0.15);
  }
}

// One fit from S = 4000 draws has a standard error near 0.11 at k = 0.5, so
// the check is on the average over independent weight vectors.
TEST(PsisTail, ParetoTwoWeightsHaveHalfShape) {
  double total = 0.0;
  const int reps = 20;
  for (int seed = 0; seed < reps; ++seed) {
    total += fit_gpd_tail(log_pareto(4000, 2.0, static_cast<std::uint64_t>(seed))).khat;
  }
  EXPECT_NEAR(total / reps, 0.5, 0.1);
}

TEST(PsisTail, SmoothingKeepsOrderAndTruncates) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto raw = log_pareto(1000, 0.8, seed);
    const auto fit = fit_gpd_tail(raw);
    const double top = *std::max_element(raw.begin(), raw.end());
    for (double w : fit.log_weights) EXPECT_LE(w, top);
    for (std::size_t j = 1; j < fit.tail.size(); ++j) {
      EXPECT_LE(fit.log_weights[fit.tail[j - 1]], fit.log_weights[fit.tail[j]]);
      EXPECT_LE(raw[fit.tail[j - 1]], raw[fit.tail[j]]);
    }
    // Untouched body.
    std::vector<bool> in_tail(raw.size(), false);
    for (std::size_t i : fit.tail) in_tail[i] = true;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!in_tail[i]) EXPECT_EQ(fit.log_weights[i], raw[i]);
    }
  }
}

TEST(PsisTail, DegenerateAndShortInputs) {
  try {
    fit_gpd_tail(std::vector<double>(100, -3.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateWeights);
  }
  std::vector<double> tied(100, 0.0);
  tied[0] = 1.0;
  try {
    fit_gpd_tail(tied);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientTail);
  }
}

TEST(PsisLoo, PhiIsTheSumAndFlagsAreSet) {
  std::mt19937_64 rng(3);
  const Eigen::Index s = 2000;
  Eigen::MatrixXd log_lik(3, s);
  std::normal_distribution<double> n(0.0, 0.3);
  const auto heavy = log_pareto(static_cast<std::size_t>(s), 1.1, 9);
  for (Eigen::Index j = 0; j < s; ++j) {
    log_lik(0, j) = -1.0 + n(rng);
    log_lik(1, j) = -0.25;
    log_lik(2, j) = -heavy[static_cast<std::size_t>(j)];
  }
  const auto loo = psis_loo_from_log_lik(log_lik);
  double sum = 0.0;
  for (double e : loo.elpd) sum += e;
  EXPECT_EQ(loo.phi, sum);
  EXPECT_NEAR(loo.elpd[1], -0.25, 1e-12);
  EXPECT_TRUE(loo.degenerate);
  EXPECT_TRUE(loo.degenerate_observations[1]);
  EXPECT_EQ(loo.khat[1], 0.0);
  EXPECT_GT(loo.khat[2], kKhatThreshold);
  EXPECT_TRUE(loo.unreliable);
  EXPECT_EQ(loo.bad_khat_count(), 1);
  EXPECT_EQ(loo.max_khat(), loo.khat[2]);

  // With light tails PSIS agrees with plain importance sampling.
  double inv_mean = 0.0;
  for (Eigen::Index j = 0; j < s; ++j) inv_mean += std::exp(-log_lik(0, j));
  inv_mean /= static_cast<double>(s);
  EXPECT_NEAR(loo.elpd[0], -std::log(inv_mean), 0.01);
  EXPECT_LT(loo.elpd[0], std::log(log_lik.row(0).array().exp().mean()));
}

TEST(SelectLatentDim, RecordsEveryDimension) {
  Example1Options o;
  o.n_points = 40;
  o.m_sets = 20;
  o.seed = 2;
  const auto data = gen_example1(o);
  SelectionConfig config;
  config.fit.iters = 100;
  config.fit.final_elbo_samples = 64;
  config.d_max = 3;
  config.loo_samples = 200;
  const auto result = select_latent_dim(data.dataset, config);
  ASSERT_EQ(result.rows.size(), 3u);
  ASSERT_TRUE(result.best_model.has_value());
  EXPECT_EQ(result.best_model->latent_dim(), result.best_d);
  double best = -INFINITY;
  for (const auto& row : result.rows) {
    EXPECT_FALSE(row.failed);
    best = std::max(best, row.phi);
  }
  EXPECT_EQ(result.rows[static_cast<std::size_t>(result.best_d - 1)].phi, best);
  const auto again = select_latent_dim(data.dataset, config);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(again.rows[i].phi, result.rows[i].phi);
}

}  // namespace
}  // namespace choicefn
