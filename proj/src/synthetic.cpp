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

#include "choicefn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "choicefn/errors.hpp"
#include "choicefn/random.hpp"

namespace choicefn {

Eigen::MatrixXd UtilityBank::evaluate(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), dim);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.row(i) = evaluator(x.row(i).transpose()).transpose();
  }
  return out;
}

bool dominates(const Eigen::Ref<const Eigen::RowVectorXd>& o,
               const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  bool strict = false;
  for (Eigen::Index i = 0; i < o.size(); ++i) {
    if (o[i] < v[i]) return false;
    if (o[i] > v[i]) strict = true;
  }
  return strict;
}

ParetoSplit pareto_choice(const Eigen::MatrixXd& utils) {
  const Eigen::Index n = utils.rows();
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "empty utility matrix");
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      if (utils.row(a) == utils.row(b)) {
        throw Error(ErrorCode::kTieDetected,
                    "rows " + std::to_string(a) + " and " + std::to_string(b) +
                        " have identical utilities");
      }
    }
  }
  ParetoSplit out;
  for (Eigen::Index v = 0; v < n; ++v) {
    bool dominated = false;
    for (Eigen::Index o = 0; o < n && !dominated; ++o) {
      dominated = o != v && dominates(utils.row(o), utils.row(v));
    }
    (dominated ? out.rejected : out.chosen).push_back(v);
  }
  return out;
}

ChoiceObservation label_set(const Eigen::MatrixXd& utils,
                            const std::vector<Index>& set) {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(set.size()), utils.cols());
  for (std::size_t i = 0; i < set.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = utils.row(set[i]);
  }
  const ParetoSplit split = pareto_choice(sub);
  ChoiceObservation obs;
  obs.set = set;
  for (Index c : split.chosen) obs.chosen.push_back(set[static_cast<std::size_t>(c)]);
  return obs;
}

UtilityBank example1_utility() {
  UtilityBank bank;
  bank.dim = 2;
  bank.description = "u(x) = [cos(2x), -sin(2x)]";
  bank.evaluator = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd u(2);
    u << std::cos(2.0 * x[0]), -std::sin(2.0 * x[0]);
    return u;
  };
  return bank;
}

std::vector<std::vector<Index>> random_subsets(Index n, int m_sets,
                                               int set_size,
                                               std::uint64_t seed) {
  if (set_size < 2 || set_size > n || m_sets < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "need 2 <= set_size <= n_points and m_sets >= 1");
  }
  std::vector<std::vector<Index>> out;
  out.reserve(static_cast<std::size_t>(m_sets));
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  for (int k = 0; k < m_sets; ++k) {
    // Partial Fisher-Yates with a per-set stream.
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::vector<Index> pool = all;
    for (int i = 0; i < set_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(
          static_cast<std::size_t>(i), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
    }
    out.emplace_back(pool.begin(), pool.begin() + set_size);
  }
  return out;
}

GeneratedData gen_example1(const Example1Options& options) {
  if (options.n_points < 2 || !(options.upper > options.lower)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid example1 options");
  }
  Rng rng(derive_seed(options.seed, 100));
  std::uniform_real_distribution<double> uniform(options.lower, options.upper);
  GeneratedData out;
  out.generator = "example1";
  out.true_dim = 2;
  auto& x = out.dataset.objects.features;
  x.resize(options.n_points, 1);
  for (int i = 0; i < options.n_points; ++i) x(i, 0) = uniform(rng);
  out.true_utilities = example1_utility().evaluate(x);
  for (const auto& set : random_subsets(options.n_points, options.m_sets,
                                        options.set_size,
                                        derive_seed(options.seed, 101))) {
    out.dataset.observations.push_back(label_set(out.true_utilities, set));
  }
  return out;
}

int KernelMixture::utility_index(int z, int z_prime) const {
  const int a = std::min(z, z_prime);
  const int b = std::max(z, z_prime);
  return a * states - a * (a - 1) / 2 + (b - a);
}

Eigen::MatrixXd KernelMixture::utilities() const {
  return cross_kernel(features, features, kernel) * alpha;
}

KernelMixture gen_kernel_mixture(Index n, Index c, int states,
                                 const KernelParams& kernel,
                                 std::uint64_t seed) {
  if (states < 1 || n < 2 || c < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid kernel-mixture options");
  }
  kernel.validate();
  KernelMixture mix;
  mix.states = states;
  mix.kernel = kernel;
  Rng feature_rng(derive_seed(seed, 200));
  mix.features = standard_normal(n, c, feature_rng);
  Rng state_rng(derive_seed(seed, 201));
  std::uniform_int_distribution<int> state(0, states - 1);
  for (Index i = 0; i < n; ++i) mix.assignment.push_back(state(state_rng));
  const int count = states * (states + 1) / 2;
  Rng alpha_rng(derive_seed(seed, 202));
  mix.alpha = standard_normal(n, count, alpha_rng);

  const Eigen::MatrixXd anchors = mix.features;
  const Eigen::MatrixXd alpha = mix.alpha;
  mix.bank.dim = count;
  mix.bank.description = "kernel mixture with " + std::to_string(states) +
                         " latent states";
  mix.bank.evaluator = [anchors, alpha, kernel](const Eigen::VectorXd& x) {
    const Eigen::MatrixXd k = cross_kernel(x.transpose(), anchors, kernel);
    return Eigen::VectorXd((k * alpha).transpose());
  };
  return mix;
}

std::vector<std::pair<Index, Index>> random_pairs(Index n, std::size_t m,
                                                  std::uint64_t seed) {
  const auto total = static_cast<std::size_t>(n * (n - 1) / 2);
  if (n < 2 || m > total) {
    throw Error(ErrorCode::kInvalidArgument, "too many pairs requested");
  }
  Rng rng(seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::set<std::pair<Index, Index>> seen;
  std::vector<std::pair<Index, Index>> out;
  while (out.size() < m) {
    Index a = pick(rng);
    Index b = pick(rng);
    if (a == b) continue;
    if (seen.insert({std::min(a, b), std::max(a, b)}).second) {
      out.emplace_back(a, b);
    }
  }
  return out;
}

ChoiceDataset gen_pairwise_datasets(
    const KernelMixture& mixture,
    const std::vector<std::pair<Index, Index>>& pairs, PairMode mode) {
  const Eigen::MatrixXd utils = mixture.utilities();
  const Index n = mixture.features.rows();
  ChoiceDataset out;
  out.objects.features = mixture.features;
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw Error(ErrorCode::kIndexOutOfRange, "invalid object pair");
    }
    ChoiceObservation obs;
    obs.set = {i, j};
    if (mode == PairMode::kD1) {
      const int k = mixture.utility_index(
          mixture.assignment[static_cast<std::size_t>(i)],
          mixture.assignment[static_cast<std::size_t>(j)]);
      if (utils(i, k) == utils(j, k)) {
        throw Error(ErrorCode::kTieDetected, "tied pair utilities");
      }
      obs.chosen = {utils(i, k) > utils(j, k) ? i : j};
    } else {
      obs = label_set(utils, obs.set);
    }
    out.observations.push_back(std::move(obs));
  }
  return out;
}

ChoiceDataset choices_to_preferences(const ChoiceDataset& choice_pairs,
                                     const Eigen::MatrixXd& outputs,
                                     ConversionMode mode, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  ChoiceDataset out;
  out.objects = choice_pairs.objects;
  for (const auto& obs : choice_pairs.observations) {
    if (obs.set.size() != 2) {
      throw Error(ErrorCode::kInvalidArgument,
                  "preference conversion needs |A| = 2");
    }
    ChoiceObservation pref;
    pref.set = obs.set;
    if (obs.chosen.size() == 1) {
      pref.chosen = obs.chosen;
    } else if (mode == ConversionMode::kRandom) {
      pref.chosen = {coin(rng) ? obs.set[0] : obs.set[1]};
    } else {
      const Index i = obs.set[0];
      const Index j = obs.set[1];
      int wins_i = 0;
      int wins_j = 0;
      for (Eigen::Index r = 0; r < outputs.cols(); ++r) {
        if (outputs(i, r) > outputs(j, r)) ++wins_i;
        if (outputs(j, r) > outputs(i, r)) ++wins_j;
      }
      if (wins_i == wins_j) {
        throw Error(ErrorCode::kMajorityTie,
                    "split vote between objects " + std::to_string(i) +
                        " and " + std::to_string(j));
      }
      pref.chosen = {wins_i > wins_j ? i : j};
    }
    out.observations.push_back(std::move(pref));
  }
  return out;
}

ChoiceDataset dense_pair_choices(const Eigen::MatrixXd& features,
                                 const Eigen::MatrixXd& outputs) {
  if (features.rows() != outputs.rows()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "features and outputs have different row counts");
  }
  ChoiceDataset out;
  out.objects.features = features;
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = i + 1; j < features.rows(); ++j) {
      out.observations.push_back(label_set(outputs, {i, j}));
    }
  }
  return out;
}

Eigen::VectorXd test_suite_utility(TestProblem problem, int n_objectives,
                                   const Eigen::VectorXd& x) {
  const Eigen::Index c = x.size();
  for (Eigen::Index i = 0; i < c; ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
      throw Error(ErrorCode::kDomainViolation,
                  "test-suite inputs must lie in [0, 1]");
    }
  }
  Eigen::VectorXd f(n_objectives);
  switch (problem) {
    case TestProblem::kZdt1: {
      if (n_objectives != 2 || c < 2) {
        throw Error(ErrorCode::kInvalidArgument,
                    "zdt1 has 2 objectives and needs c >= 2");
      }
      const double g = 1.0 + 9.0 * x.tail(c - 1).sum() / static_cast<double>(c - 1);
      f[0] = x[0];
      f[1] = g * (1.0 - std::sqrt(x[0] / g));
      break;
    }
    case TestProblem::kDtlz2: {
      const int m = n_objectives;
      if (m < 2 || c < m) {
        throw Error(ErrorCode::kInvalidArgument,
                    "dtlz2 needs 2 <= objectives <= c");
      }
      const double g = (x.tail(c - m + 1).array() - 0.5).square().sum();
      constexpr double kHalfPi = std::numbers::pi / 2.0;
      for (int k = 0; k < m; ++k) {
        double v = 1.0 + g;
        for (int j = 0; j < m - 1 - k; ++j) v *= std::cos(x[j] * kHalfPi);
        if (k > 0) v *= std::sin(x[m - 1 - k] * kHalfPi);
        f[k] = v;
      }
      break;
    }
  }
  return -f;
}

GeneratedData gen_test_suite(const TestSuiteOptions& options) {
  Rng rng(derive_seed(options.seed, 300));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GeneratedData out;
  out.generator = options.problem == TestProblem::kZdt1 ? "zdt1" : "dtlz2";
  out.true_dim = options.n_objectives;
  auto& x = out.dataset.objects.features;
  x.resize(options.n_points, options.n_features);
  for (int i = 0; i < options.n_points; ++i) {
    for (int j = 0; j < options.n_features; ++j) x(i, j) = unit(rng);
  }
  out.true_utilities.resize(options.n_points, options.n_objectives);
  for (int i = 0; i < options.n_points; ++i) {
    out.true_utilities.row(i) =
        test_suite_utility(options.problem, options.n_objectives,
                           x.row(i).transpose())
            .transpose();
  }
  for (const auto& set : random_subsets(options.n_points, options.m_sets,
                                        options.set_size,
                                        derive_seed(options.seed, 301))) {
    out.dataset.observations.push_back(label_set(out.true_utilities, set));
  }
  return out;
}

}  // namespace choicefn
