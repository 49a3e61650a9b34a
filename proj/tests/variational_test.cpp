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

#include "choicefn/variational.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "choicefn/errors.hpp"
#include "choicefn/likelihood.hpp"
#include "choicefn/random.hpp"
#include "choicefn/synthetic.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace choicefn {
namespace {

using testing::central_difference;
using testing::max_relative_error;
using testing::random_dataset;
using testing::random_matrix;

VariationalState random_state(std::mt19937_64& rng, Index t, Index c, int d,
                              bool shared) {
  VariationalState s;
  for (int i = 0; i < d; ++i) {
    s.nu.push_back(random_matrix(rng, t, 1, 0.5).col(0));
    s.log_lambda.push_back(random_matrix(rng, t, 1, 0.5).col(0));
  }
  const int kernels = shared ? 1 : d;
  for (int k = 0; k < kernels; ++k) {
    s.log_lengthscales.push_back(random_matrix(rng, c, 1, 0.2).col(0));
  }
  s.log_sigma = std::log(0.7);
  return s;
}

TEST(CholeskyBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const Index n = 5;
  const Eigen::MatrixXd b = random_matrix(rng, n, n);
  const Eigen::MatrixXd a = b * b.transpose() + Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd weight = random_matrix(rng, n, n);
  auto f = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(m).matrixL();
    return (l.cwiseProduct(weight.triangularView<Eigen::Lower>().toDenseMatrix())).sum();
  };
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(a).matrixL();
  const Eigen::MatrixXd grad = cholesky_backward(l, weight);
  // Perturb a symmetric pair together: df = 2 grad_ij h for i != j.
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double h = 1e-6;
      Eigen::MatrixXd plus = a;
      Eigen::MatrixXd minus = a;
      plus(i, j) += h;
      minus(i, j) -= h;
      if (i != j) {
        plus(j, i) += h;
        minus(j, i) -= h;
      }
      const double fd = (f(plus) - f(minus)) / (2 * h);
      const double analytic = i == j ? grad(i, i) : 2.0 * grad(i, j);
      EXPECT_NEAR(analytic, fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(ElboGradient, MatchesFiniteDifferencesWithCommonRandomNumbers) {
  std::mt19937_64 rng(11);
  for (int instance = 0; instance < 10; ++instance) {
    const Index t = 4 + instance % 7;
    const int d = 1 + instance % 2;
    const bool shared = instance % 3 != 0;
    const ChoiceDataset ds = random_dataset(rng, t, 2, 5, 4);
    const PairEncoding enc = encode_pairs(ds);
    const VariationalState state = random_state(rng, t, 2, d, shared);
    Rng noise_rng(instance);
    std::vector<Eigen::MatrixXd> noise;
    for (int i = 0; i < d; ++i) noise.push_back(standard_normal(t, 8, noise_rng));

    const auto [terms, grad] =
        elbo_gradient(state, ds.objects.features, enc, noise);
    auto f = [&](const Eigen::VectorXd& theta) {
      VariationalState s = state;
      s.unpack(theta);
      return elbo_value(s, ds.objects.features, enc, noise).value;
    };
    EXPECT_NEAR(terms.value, f(state.pack()), 1e-10);
    const Eigen::VectorXd fd = central_difference(f, state.pack(), 1e-5);
    const double floor = 1e-2 * std::max(1.0, fd.cwiseAbs().maxCoeff());
    EXPECT_LT(max_relative_error(grad, fd, floor), 1e-4)
        << "instance " << instance << "\nanalytic " << grad.transpose()
        << "\nfd       " << fd.transpose();
  }
}

// Dense Gaussian KL, written from the textbook formula.
double dense_kl(const Eigen::MatrixXd& k, const Eigen::VectorXd& nu,
                const Eigen::VectorXd& lambda) {
  const Index t = k.rows();
  const Eigen::MatrixXd k_inv = k.inverse();
  const Eigen::MatrixXd s = (k_inv + Eigen::MatrixXd(lambda.asDiagonal())).inverse();
  const Eigen::VectorXd m = k * nu;
  const double logdet_k = 2.0 * Eigen::LLT<Eigen::MatrixXd>(k).matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_s = 2.0 * Eigen::LLT<Eigen::MatrixXd>(s).matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * ((k_inv * s).trace() + m.dot(k_inv * m) - static_cast<double>(t) + logdet_k - logdet_s);
}

TEST(KlDivergence, MatchesDenseFormulaAndIsNonNegative) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Index t = 3 + trial % 8;
    const Eigen::MatrixXd x = random_matrix(rng, t, 2);
    const auto gram = gram_matrix(x, KernelParams{Eigen::VectorXd::Constant(2, 0.8), 1e-3});
    const Eigen::VectorXd nu = random_matrix(rng, t, 1).col(0);
    const Eigen::VectorXd log_lambda = random_matrix(rng, t, 1).col(0);
    const double kl = kl_divergence(gram, nu, log_lambda);
    EXPECT_GE(kl, -1e-15);
    const double expected = dense_kl(gram.matrix, nu, log_lambda.array().exp().matrix());
    EXPECT_NEAR(kl, expected, 1e-7 * std::max(1.0, expected));
  }
}

TEST(KlDivergence, VanishesAtThePrior) {
  std::mt19937_64 rng(22);
  const Eigen::MatrixXd x = random_matrix(rng, 8, 1);
  const auto gram = gram_matrix(x, KernelParams{Eigen::VectorXd::Constant(1, 1.0), 1e-4});
  const double kl = kl_divergence(gram, Eigen::VectorXd::Zero(8),
                                  Eigen::VectorXd::Constant(8, std::log(1e-10)));
  EXPECT_LT(kl, 1e-6);
  EXPECT_GE(kl, -1e-15);
}

TEST(Elbo, DeterministicNonPositiveAndThreadInvariant) {
  std::mt19937_64 rng(23);
  const ChoiceDataset ds = random_dataset(rng, 9, 2, 6, 4);
  const PairEncoding enc = encode_pairs(ds);
  const VariationalState state = random_state(rng, 9, 2, 2, true);
  const auto a = elbo(state, ds.objects.features, enc, 64, 5);
  const auto b = elbo(state, ds.objects.features, enc, 64, 5);
  const auto c = elbo(state, ds.objects.features, enc, 64, 5, kDefaultJitter, 3);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.value, c.value);
  EXPECT_LE(a.value, 0.0);
  EXPECT_NEAR(a.value, a.expected_log_lik - a.kl, 1e-12);
}

TEST(FittedModel, CovarianceFactorReproducesPosterior) {
  std::mt19937_64 rng(24);
  const Index t = 7;
  const ChoiceDataset ds = random_dataset(rng, t, 2, 5, 4);
  const VariationalState state = random_state(rng, t, 2, 2, false);
  const FittedModel model(ds.objects.features, state, kDefaultJitter);
  for (int i = 0; i < 2; ++i) {
    const Eigen::MatrixXd k = model.gram(i).matrix;
    const Eigen::VectorXd lambda = state.log_lambda[static_cast<std::size_t>(i)].array().exp();
    const Eigen::MatrixXd s = (k.inverse() + Eigen::MatrixXd(lambda.asDiagonal())).inverse();
    const Eigen::MatrixXd& r = model.covariance_factor(i);
    EXPECT_LT((r * r.transpose() - s).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((model.posterior_covariance(i) - s).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((model.posterior_mean().col(i) - k * state.nu[static_cast<std::size_t>(i)]).norm(), 1e-10);
  }
}

TEST(MapEstimate, SingleComparisonOrdersTheObjects) {
  ChoiceDataset ds;
  ds.objects.features = Eigen::MatrixXd{{0.0}, {1.5}};
  ds.observations.push_back({{0, 1}, {0}});
  MapInit init;
  init.kernel = KernelParams{Eigen::VectorXd::Constant(1, 1.0), kDefaultJitter};
  const Eigen::MatrixXd u = map_estimate(ds, 1, init, 500);
  EXPECT_GT(u(0, 0), u(1, 0));
}

TEST(MapObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(25);
  const Index t = 6;
  const ChoiceDataset ds = random_dataset(rng, t, 2, 5, 4);
  const PairEncoding enc = encode_pairs(ds);
  const auto gram = gram_matrix(ds.objects.features, KernelParams{Eigen::VectorXd::Constant(2, 1.0), 1e-3});
  const Eigen::MatrixXd u = random_matrix(rng, t, 2, 0.5);
  const auto obj = map_objective(enc, gram, u, 0.6);
  auto f = [&](const Eigen::VectorXd& flat) {
    return map_objective(enc, gram, flat.reshaped(t, 2), 0.6).value;
  };
  const Eigen::VectorXd fd = central_difference(f, u.reshaped(), 1e-6);
  EXPECT_LT((obj.d_u.reshaped() - fd).norm() / fd.norm(), 1e-6);
}

TEST(Fit, DeterministicAndImprovesElbo) {
  Example1Options o;
  o.n_points = 40;
  o.m_sets = 25;
  o.seed = 3;
  const auto data = gen_example1(o);
  FitConfig config;
  config.iters = 300;
  config.seed = 9;
  config.final_elbo_samples = 256;
  const auto [m1, r1] = fit(data.dataset, 2, config);
  config.threads = 2;
  const auto [m2, r2] = fit(data.dataset, 2, config);
  EXPECT_EQ(m1.state().pack(), m2.state().pack());
  EXPECT_EQ(r1.elbo_trace, r2.elbo_trace);
  EXPECT_EQ(r1.final_elbo, r2.final_elbo);
  EXPECT_EQ(r1.iterations, 300);
  auto mean_of = [&](std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += r1.elbo_trace[i];
    return s / static_cast<double>(end - begin);
  };
  EXPECT_GT(mean_of(250, 300), mean_of(0, 20));
  EXPECT_EQ(m1.training_index().size(), static_cast<std::size_t>(m1.num_objects()));
}

TEST(Fit, RecoversOrderingOfMonotoneUtility) {
  ChoiceDataset ds;
  const Index t = 25;
  ds.objects.features = Eigen::VectorXd::LinSpaced(t, -2.0, 2.0);
  std::mt19937_64 rng(26);
  std::uniform_int_distribution<Index> pick(0, t - 1);
  for (int k = 0; k < 120; ++k) {
    Index a = pick(rng), b = pick(rng);
    while (b == a) b = pick(rng);
    // u(x) = x^3 + x is increasing.
    ds.observations.push_back({{a, b}, {std::max(a, b)}});
  }
  FitConfig config;
  config.iters = 800;
  config.final_elbo_samples = 64;
  const auto [model, report] = fit(ds, 1, config);
  const auto& idx = model.training_index();
  const Eigen::VectorXd mean = model.posterior_mean().col(0);
  int agree = 0, total = 0;
  for (Index i = 0; i < mean.size(); ++i) {
    for (Index j = i + 1; j < mean.size(); ++j) {
      ++total;
      const bool truth = idx[static_cast<std::size_t>(i)] > idx[static_cast<std::size_t>(j)];
      agree += (mean[i] > mean[j]) == truth;
    }
  }
  EXPECT_GE(agree, 0.95 * total);
}

TEST(Fit, RejectsBadArguments) {
  ChoiceDataset ds;
  ds.objects.features = Eigen::MatrixXd{{0.0}, {1.0}};
  ds.observations.push_back({{0, 1}, {0}});
  EXPECT_THROW(fit(ds, 0, FitConfig{}), Error);
  FitConfig bad;
  bad.mc_samples = 0;
  EXPECT_THROW(fit(ds, 1, bad), Error);
}

TEST(Fit, SmoothedElboImprovesOnShippedDatasets) {
  int checked = 0;
  for (const auto& entry : std::filesystem::directory_iterator(CHOICEFN_DATA_DIR)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".json" || name.find("_truth") != std::string::npos) continue;
    const ChoiceDataset ds = load_dataset(entry.path().string());
    std::string truth_path = entry.path().string();
    truth_path.replace(truth_path.size() - 5, 5, "_truth.json");
    std::ifstream truth_file(truth_path);
    const int d = nlohmann::json::parse(truth_file).at("true_dim").get<int>();
    FitConfig config;
    config.final_elbo_samples = 64;
    const auto [model, report] = fit(ds, d, config);
    ASSERT_EQ(report.elbo_trace.size(), 5000u);
    auto window_mean = [&](std::size_t end) {
      double s = 0.0;
      for (std::size_t i = end - 100; i < end; ++i) s += report.elbo_trace[i];
      return s / 100.0;
    };
    EXPECT_GE(window_mean(5000), window_mean(500)) << name;
    ++checked;
  }
  EXPECT_GE(checked, 2);
}

}  // namespace
}  // namespace choicefn
