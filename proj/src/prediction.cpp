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

#include "choicefn/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "choicefn/errors.hpp"
#include "choicefn/kernel.hpp"
#include "choicefn/likelihood.hpp"
#include "choicefn/random.hpp"
#include "choicefn/synthetic.hpp"

namespace choicefn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cross-covariance with the training jitter added where inputs coincide.
MatrixXd cross_with_nugget(const MatrixXd& a, const MatrixXd& b,
                           const KernelParams& params, double nugget) {
  MatrixXd k = cross_kernel(a, b, params);
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (a.row(i) == b.row(j)) k(i, j) += nugget;
    }
  }
  return k;
}

void check_members(const std::vector<Index>& a_star, Eigen::Index rows) {
  if (a_star.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "A* needs at least two objects");
  }
  std::vector<Index> sorted = a_star;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::kInvalidArgument, "A* lists an object twice");
  }
  for (Index v : a_star) {
    if (v < 0 || v >= rows) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "A* index " + std::to_string(v) + " is out of range");
    }
  }
}

MatrixXd select_rows(const MatrixXd& x, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return out;
}

// Positions in A* of each member of C*; throws unless C* is a non-empty
// subset of A*.
std::vector<Index> positions_in(const std::vector<Index>& a_star,
                                const std::vector<Index>& c_star) {
  if (c_star.empty()) {
    throw Error(ErrorCode::kEmptyChoiceSet, "C* must not be empty");
  }
  std::vector<Index> pos;
  for (Index v : c_star) {
    const auto it = std::find(a_star.begin(), a_star.end(), v);
    if (it == a_star.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "C* member " + std::to_string(v) + " is not in A*");
    }
    pos.push_back(static_cast<Index>(it - a_star.begin()));
  }
  std::sort(pos.begin(), pos.end());
  if (std::adjacent_find(pos.begin(), pos.end()) != pos.end()) {
    throw Error(ErrorCode::kInvalidArgument, "C* lists an object twice");
  }
  return pos;
}

std::vector<Index> members(std::uint64_t mask, Index n) {
  std::vector<Index> out;
  for (Index j = 0; j < n; ++j) {
    if ((mask >> j) & 1U) out.push_back(j);
  }
  return out;
}

std::vector<char> undominated(const MatrixXd& utils) {
  const Eigen::Index n = utils.rows();
  std::vector<char> keep(static_cast<std::size_t>(n), 1);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index o = 0; o < n; ++o) {
      if (o != v && dominates(utils.row(o), utils.row(v))) {
        keep[static_cast<std::size_t>(v)] = 0;
        break;
      }
    }
  }
  return keep;
}

// p(C | A, u) under the relaxed likelihood, with A = all rows of u.
double relaxed_probability(const PairEncoding& encoding, const MatrixXd& u,
                           double sigma) {
  return std::exp(log_lik_observation(encoding, 0, u, sigma,
                                      LikelihoodOptions{/*clamp=*/false}));
}

PairEncoding encode_positions(Index n, const std::vector<Index>& chosen) {
  ChoiceDataset single;
  ChoiceObservation obs;
  for (Index j = 0; j < n; ++j) obs.set.push_back(j);
  obs.chosen = chosen;
  single.observations.push_back(std::move(obs));
  return encode_pairs(single);
}

void check_samples(int n_samples) {
  if (n_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_samples must be >= 1");
  }
}

}  // namespace

std::uint64_t undominated_mask(const Eigen::MatrixXd& utils) {
  if (utils.rows() > 64) {
    throw Error(ErrorCode::kInvalidArgument, "at most 64 rows in a mask");
  }
  const std::vector<char> keep = undominated(utils);
  std::uint64_t mask = 0;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (keep[j]) mask |= std::uint64_t{1} << j;
  }
  return mask;
}

std::vector<Eigen::MatrixXd> PredictiveGaussian::sample(
    int n, std::uint64_t seed) const {
  check_samples(n);
  Rng rng(seed);
  const int d = latent_dim();
  const Eigen::Index p = size();
  std::vector<MatrixXd> out(static_cast<std::size_t>(n), MatrixXd(p, d));
  for (int i = 0; i < d; ++i) {
    const auto iz = static_cast<std::size_t>(i);
    const MatrixXd factor = stable_cholesky(covariance[iz], 1e-12);
    MatrixXd draws = factor.triangularView<Eigen::Lower>() *
                     standard_normal(p, n, rng);
    draws.colwise() += mean[iz];
    for (int s = 0; s < n; ++s) {
      out[static_cast<std::size_t>(s)].col(i) = draws.col(s);
    }
  }
  return out;
}

PredictiveGaussian predict_latent(const FittedModel& model,
                                  const Eigen::MatrixXd& x_star) {
  if (x_star.cols() != model.features().cols()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "test objects have " + std::to_string(x_star.cols()) +
                    " features, model expects " +
                    std::to_string(model.features().cols()));
  }
  if (!x_star.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "test features must be finite");
  }
  const MatrixXd& x = model.features();
  PredictiveGaussian out;
  for (int i = 0; i < model.latent_dim(); ++i) {
    const auto iz = static_cast<std::size_t>(i);
    const GramMatrix& gram = model.gram(i);
    const KernelParams params = model.kernel(i);
    const MatrixXd k_star = cross_with_nugget(x, x_star, params, gram.jitter);
    MatrixXd k_ss = cross_with_nugget(x_star, x_star, params, gram.jitter);
    out.mean.push_back(k_star.transpose() * model.state().nu[iz]);

    // (K + diag(lambda)^{-1})^{-1} = D B^{-1} D with D = diag(lambda)^{1/2},
    // B = I + D K D, which stays well conditioned as lambda -> 0.
    const VectorXd root = model.state().log_lambda[iz].array().exp().sqrt().matrix();
    MatrixXd b = root.asDiagonal() * gram.matrix * root.asDiagonal();
    b.diagonal().array() += 1.0;
    const Eigen::LLT<MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::kFactorizationFailure,
                  "predictive system is not positive definite");
    }
    MatrixXd v = root.asDiagonal() * k_star;
    llt.matrixL().solveInPlace(v);
    k_ss.noalias() -= v.transpose() * v;
    out.covariance.push_back(0.5 * (k_ss + k_ss.transpose()));
  }
  return out;
}

double choice_probability(const FittedModel& model, const Eigen::MatrixXd& x_star,
                          const std::vector<Index>& a_star,
                          const std::vector<Index>& c_star, int n_samples,
                          std::uint64_t seed, ProbabilitySemantics semantics) {
  check_members(a_star, x_star.rows());
  check_samples(n_samples);
  const std::vector<Index> pos = positions_in(a_star, c_star);
  const auto n = static_cast<Index>(a_star.size());
  const PredictiveGaussian pred =
      predict_latent(model, select_rows(x_star, a_star));
  const auto draws = pred.sample(n_samples, seed);
  double total = 0.0;
  if (semantics == ProbabilitySemantics::kRelaxed) {
    const PairEncoding encoding = encode_positions(n, pos);
    for (const auto& u : draws) {
      total += relaxed_probability(encoding, u, model.sigma());
    }
  } else {
    std::vector<char> target(static_cast<std::size_t>(n), 0);
    for (Index p : pos) target[static_cast<std::size_t>(p)] = 1;
    for (const auto& u : draws) total += undominated(u) == target ? 1.0 : 0.0;
  }
  return total / static_cast<double>(n_samples);
}

SetPrediction predict_set(const FittedModel& model, const Eigen::MatrixXd& x_star,
                          const std::vector<Index>& a_star,
                          const SetPredictionOptions& options) {
  check_members(a_star, x_star.rows());
  check_samples(options.n_samples);
  const auto n = static_cast<Index>(a_star.size());
  const bool enumerate =
      options.mode == SetPredictionMode::kExact || options.subset_probabilities;
  if (enumerate && n > kMaxExactSetSize) {
    throw Error(ErrorCode::kInvalidArgument,
                "subset enumeration needs |A*| <= " +
                    std::to_string(kMaxExactSetSize));
  }
  const PredictiveGaussian pred =
      predict_latent(model, select_rows(x_star, a_star));
  const auto draws = pred.sample(options.n_samples, options.seed);
  const double inv_n = 1.0 / static_cast<double>(options.n_samples);

  SetPrediction out;
  out.marginal.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> votes(enumerate ? (std::size_t{1} << n) : 0, 0.0);
  for (const auto& u : draws) {
    const std::vector<char> keep = undominated(u);
    std::uint64_t mask = 0;
    for (Index j = 0; j < n; ++j) {
      if (keep[static_cast<std::size_t>(j)]) {
        out.marginal[static_cast<std::size_t>(j)] += inv_n;
        mask |= std::uint64_t{1} << j;
      }
    }
    if (enumerate) votes[mask] += inv_n;
  }

  std::vector<Index> chosen_pos;
  if (options.mode == SetPredictionMode::kExact) {
    std::uint64_t best = 1;
    for (std::uint64_t mask = 1; mask < votes.size(); ++mask) {
      if (votes[mask] > votes[best]) best = mask;
    }
    chosen_pos = members(best, n);
  } else {
    for (Index j = 0; j < n; ++j) {
      if (out.marginal[static_cast<std::size_t>(j)] >= 0.5) chosen_pos.push_back(j);
    }
    if (chosen_pos.empty()) {
      const auto top = std::max_element(out.marginal.begin(), out.marginal.end());
      chosen_pos.push_back(static_cast<Index>(top - out.marginal.begin()));
    }
  }
  for (Index p : chosen_pos) out.chosen.push_back(a_star[static_cast<std::size_t>(p)]);

  if (options.subset_probabilities) {
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
      const std::vector<Index> pos = members(mask, n);
      SubsetProbability entry;
      for (Index p : pos) entry.subset.push_back(a_star[static_cast<std::size_t>(p)]);
      if (options.subset_semantics == ProbabilitySemantics::kIndicator) {
        entry.probability = votes[mask];
      } else {
        const PairEncoding encoding = encode_positions(n, pos);
        for (const auto& u : draws) {
          entry.probability += relaxed_probability(encoding, u, model.sigma());
        }
        entry.probability *= inv_n;
      }
      out.subsets.push_back(std::move(entry));
    }
  }
  return out;
}

std::vector<Index> predict_choice_set(const FittedModel& model,
                                      const Eigen::MatrixXd& x_star,
                                      const std::vector<Index>& a_star,
                                      int n_samples, std::uint64_t seed,
                                      SetPredictionMode mode) {
  SetPredictionOptions options;
  options.n_samples = n_samples;
  options.seed = seed;
  options.mode = mode;
  return predict_set(model, x_star, a_star, options).chosen;
}

}  // namespace choicefn
