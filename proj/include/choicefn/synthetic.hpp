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

// Ground-truth utilities and the data-generation protocols built on them.
// Every generator labels sets with the exact strong-Pareto rule: v is
// rejected iff some o in A is at least as good in every utility and strictly
// better in one.

#ifndef CHOICEFN_SYNTHETIC_HPP_
#define CHOICEFN_SYNTHETIC_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "choicefn/dataset.hpp"
#include "choicefn/kernel.hpp"

namespace choicefn {

struct UtilityBank {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> evaluator;
  int dim = 0;
  std::string description;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    return evaluator(x);
  }
  /// Row-wise evaluation, n x dim.
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& x) const;
};

struct ParetoSplit {
  std::vector<Index> chosen;
  std::vector<Index> rejected;
};

/// Strong-Pareto undominated rows of `utils` (n x d). Brute force O(n^2 d).
/// Throws Error{kTieDetected} if two rows are identical.
ParetoSplit pareto_choice(const Eigen::MatrixXd& utils);

/// True iff row `o` strongly Pareto-dominates row `v`.
bool dominates(const Eigen::Ref<const Eigen::RowVectorXd>& o,
               const Eigen::Ref<const Eigen::RowVectorXd>& v);

/// Labels the offered set `set` (indices into `utils`) by pareto_choice.
ChoiceObservation label_set(const Eigen::MatrixXd& utils,
                            const std::vector<Index>& set);

/// A generated dataset together with the utilities that produced it.
struct GeneratedData {
  ChoiceDataset dataset;
  Eigen::MatrixXd true_utilities;  // t x true_dim
  int true_dim = 0;
  std::string generator;
};

/// u(x) = [cos 2x, -sin 2x].
UtilityBank example1_utility();

struct Example1Options {
  int n_points = 200;
  int m_sets = 50;
  int set_size = 3;
  double lower = -4.5;
  double upper = 4.5;
  std::uint64_t seed = 0;
};

GeneratedData gen_example1(const Example1Options& options);

/// Uniform subsets of {0..n-1} of size `set_size`, independent per set.
std::vector<std::vector<Index>> random_subsets(Index n, int m_sets,
                                               int set_size, std::uint64_t seed);

/// Latent-state utility bank: one GP-style utility u_{z,z'} per unordered
/// pair of states, u_{z,z'}(x) = sum_j alpha_j k(x, x_j), alpha ~ N(0, I).
struct KernelMixture {
  Eigen::MatrixXd features;        // n x c, the anchor points x_j
  std::vector<int> assignment;     // latent state of each row
  int states = 1;                  // L
  Eigen::MatrixXd alpha;           // n x L(L+1)/2
  KernelParams kernel;
  UtilityBank bank;                // x -> all L(L+1)/2 utilities

  /// Column of `alpha` (and of bank output) for the pair {z, z'}.
  int utility_index(int z, int z_prime) const;
  /// All utilities at the n anchor points, n x L(L+1)/2.
  Eigen::MatrixXd utilities() const;
};

KernelMixture gen_kernel_mixture(Index n, Index c, int states,
                                 const KernelParams& kernel, std::uint64_t seed);

/// D1: forced winner by the utility selected by both latent states.
/// D2: a singleton only if one object wins on every utility, else both.
enum class PairMode { kD1, kD2 };

/// Distinct unordered pairs of {0..n-1}, uniformly at random.
std::vector<std::pair<Index, Index>> random_pairs(Index n, std::size_t m,
                                                  std::uint64_t seed);

ChoiceDataset gen_pairwise_datasets(
    const KernelMixture& mixture,
    const std::vector<std::pair<Index, Index>>& pairs, PairMode mode);

enum class ConversionMode { kRandom, kMajority };

/// Turns binary choice observations into forced preferences. Singletons pass
/// through; an incomparable pair is resolved by a seeded coin flip or by
/// which object is better on more columns of `outputs` (n x r, higher is
/// better). Throws Error{kMajorityTie} on a split vote.
ChoiceDataset choices_to_preferences(const ChoiceDataset& choice_pairs,
                                     const Eigen::MatrixXd& outputs,
                                     ConversionMode mode, std::uint64_t seed);

/// Every unordered pair of rows labelled by Pareto dominance on `outputs`.
ChoiceDataset dense_pair_choices(const Eigen::MatrixXd& features,
                                 const Eigen::MatrixXd& outputs);

enum class TestProblem { kZdt1, kDtlz2 };

/// Negated objectives (higher is better) of a multi-criteria test problem on
/// x in [0, 1]^c. Throws Error{kDomainViolation} outside the box.
Eigen::VectorXd test_suite_utility(TestProblem problem, int n_objectives,
                                   const Eigen::VectorXd& x);

struct TestSuiteOptions {
  TestProblem problem = TestProblem::kDtlz2;
  int n_objectives = 3;
  int n_points = 200;
  int n_features = 6;
  int m_sets = 200;
  int set_size = 10;
  std::uint64_t seed = 0;
};

GeneratedData gen_test_suite(const TestSuiteOptions& options);

}  // namespace choicefn

#endif  // CHOICEFN_SYNTHETIC_HPP_
