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

#include "choicefn/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "choicefn/errors.hpp"
#include "choicefn/likelihood.hpp"
#include "choicefn/parallel.hpp"
#include "choicefn/random.hpp"

namespace choicefn {

namespace {

constexpr double kPriorScale = 3.0;  // Zhang-Stephens prior on b
constexpr double kPriorShape = 10.0;  // pseudo-observations pulling k to 0.5

double log_sum_exp(std::span<const double> x) {
  const double top = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double v : x) s += std::exp(v - top);
  return top + std::log(s);
}

}  // namespace

GpdFit fit_gpd(std::span<const double> x) {
  const auto n = x.size();
  if (n < 5) {
    throw Error(ErrorCode::kInsufficientTail, "need at least 5 exceedances");
  }
  const double quartile = x[static_cast<std::size_t>(n / 4.0 + 0.5) - 1];
  const double largest = x[n - 1];
  if (!(quartile > 0.0) || !(largest > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "exceedances must be positive");
  }
  // Grid of candidate b = -k / sigma and their profile log-likelihoods.
  const auto m_est = static_cast<std::size_t>(30 + std::sqrt(static_cast<double>(n)));
  std::vector<double> b(m_est);
  std::vector<double> profile(m_est);
  for (std::size_t j = 0; j < m_est; ++j) {
    b[j] = 1.0 - std::sqrt(static_cast<double>(m_est) /
                           (static_cast<double>(j + 1) - 0.5));
    b[j] = b[j] / (kPriorScale * quartile) + 1.0 / largest;
    double k = 0.0;
    for (double v : x) k += std::log1p(-b[j] * v);
    k /= static_cast<double>(n);
    profile[j] = static_cast<double>(n) * (std::log(-b[j] / k) - k - 1.0);
  }
  // Posterior weights w_j = 1 / sum_i exp(profile_i - profile_j).
  std::vector<double> weights(m_est);
  for (std::size_t j = 0; j < m_est; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m_est; ++i) s += std::exp(profile[i] - profile[j]);
    weights[j] = 1.0 / s;
  }
  double total = 0.0;
  double b_post = 0.0;
  for (std::size_t j = 0; j < m_est; ++j) {
    if (weights[j] < 10.0 * std::numeric_limits<double>::epsilon()) continue;
    total += weights[j];
    b_post += weights[j] * b[j];
  }
  b_post /= total;
  double k_post = 0.0;
  for (double v : x) k_post += std::log1p(-b_post * v);
  k_post /= static_cast<double>(n);
  GpdFit fit;
  fit.sigma = -k_post / b_post;
  const double nd = static_cast<double>(n);
  fit.k = (nd * k_post + kPriorShape * 0.5) / (nd + kPriorShape);
  return fit;
}

double gpd_quantile(double p, double k, double sigma) {
  if (!(p > 0.0 && p < 1.0) || !(sigma > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (std::abs(k) < std::numeric_limits<double>::epsilon()) {
    return -sigma * std::log1p(-p);
  }
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

int psis_tail_size(std::size_t n_samples) {
  const double s = static_cast<double>(n_samples);
  return static_cast<int>(std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(s))));
}

GpdTailFit fit_gpd_tail(std::span<const double> log_weights) {
  const std::size_t s = log_weights.size();
  if (s == 0) {
    throw Error(ErrorCode::kInsufficientTail, "no weights");
  }
  const auto [lo, hi] = std::minmax_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(*hi) || !std::isfinite(*lo)) {
    throw Error(ErrorCode::kNonFinite, "log weights must be finite");
  }
  if (*hi - *lo <= 1e-12) {
    throw Error(ErrorCode::kDegenerateWeights, "all importance weights are equal");
  }
  const auto m = static_cast<std::size_t>(psis_tail_size(s));
  if (m >= s) {
    throw Error(ErrorCode::kInsufficientTail, "too few weights for a tail");
  }
  const double top = *hi;
  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return log_weights[a] < log_weights[b];
  });
  // Work relative to the largest weight so exp() cannot overflow.
  const double floor = std::log(std::numeric_limits<double>::min());
  const double cut = std::max(log_weights[order[s - m - 1]] - top, floor);
  const double exp_cut = std::exp(cut);

  GpdTailFit out;
  for (std::size_t i = s - m; i < s; ++i) {
    if (log_weights[order[i]] - top > cut) out.tail.push_back(order[i]);
  }
  if (out.tail.size() < 5) {
    throw Error(ErrorCode::kInsufficientTail,
                "fewer than 5 weights above the cut point");
  }
  std::vector<double> exceed;
  exceed.reserve(out.tail.size());
  for (std::size_t i : out.tail) exceed.push_back(std::exp(log_weights[i] - top) - exp_cut);

  const GpdFit fit = fit_gpd(exceed);
  out.khat = fit.k;
  out.sigma = fit.sigma;
  out.log_weights.assign(log_weights.begin(), log_weights.end());
  if (std::isfinite(fit.k)) {
    const double len = static_cast<double>(out.tail.size());
    for (std::size_t j = 0; j < out.tail.size(); ++j) {
      const double q = gpd_quantile((static_cast<double>(j) + 0.5) / len, fit.k, fit.sigma);
      out.log_weights[out.tail[j]] = std::log(q + exp_cut) + top;
    }
  }
  for (double& w : out.log_weights) w = std::min(w, top);
  return out;
}

double LooResult::max_khat() const {
  return khat.empty() ? 0.0 : *std::max_element(khat.begin(), khat.end());
}

int LooResult::bad_khat_count() const {
  return static_cast<int>(std::count_if(khat.begin(), khat.end(), [](double k) {
    return k > kKhatThreshold;
  }));
}

LooResult psis_loo_from_log_lik(const Eigen::MatrixXd& log_lik) {
  const Eigen::Index m = log_lik.rows();
  const Eigen::Index s = log_lik.cols();
  if (psis_tail_size(static_cast<std::size_t>(s)) < 5) {
    throw Error(ErrorCode::kInsufficientTail,
                "PSIS-LOO needs at least 21 posterior samples");
  }
  LooResult out;
  out.n_samples = static_cast<int>(s);
  out.elpd.resize(static_cast<std::size_t>(m));
  out.khat.resize(static_cast<std::size_t>(m));
  out.degenerate_observations.assign(static_cast<std::size_t>(m), 0);
  std::vector<double> raw(static_cast<std::size_t>(s));
  std::vector<double> num(static_cast<std::size_t>(s));
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto kz = static_cast<std::size_t>(k);
    for (Eigen::Index j = 0; j < s; ++j) raw[static_cast<std::size_t>(j)] = -log_lik(k, j);
    std::vector<double> smoothed;
    try {
      GpdTailFit fit = fit_gpd_tail(raw);
      out.khat[kz] = fit.khat;
      smoothed = std::move(fit.log_weights);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateWeights &&
          e.code() != ErrorCode::kInsufficientTail) {
        throw;
      }
      out.khat[kz] = 0.0;
      out.degenerate_observations[kz] = 1;
      out.degenerate = true;
      smoothed = raw;
    }
    // Self-normalized after smoothing.
    for (Eigen::Index j = 0; j < s; ++j) {
      num[static_cast<std::size_t>(j)] = smoothed[static_cast<std::size_t>(j)] + log_lik(k, j);
    }
    out.elpd[kz] = log_sum_exp(num) - log_sum_exp(smoothed);
    out.phi += out.elpd[kz];
  }
  out.unreliable = out.bad_khat_count() > 0;
  return out;
}

LooResult psis_loo(const FittedModel& model, const ChoiceDataset& dataset,
                   int n_samples, std::uint64_t seed, int threads) {
  if (n_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_samples must be >= 1");
  }
  const PairEncoding encoding = model.encode(dataset);
  const auto draws = model.sample_posterior(n_samples, seed);
  const auto m = static_cast<Eigen::Index>(encoding.num_observations());
  Eigen::MatrixXd log_lik(m, n_samples);
  parallel_for(n_samples, threads, [&](long s) {
    log_lik.col(s) = log_lik_per_observation(encoding, draws[static_cast<std::size_t>(s)],
                                             model.sigma());
  });
  LooResult out = psis_loo_from_log_lik(log_lik);
  out.seed = seed;
  return out;
}

SelectionResult select_latent_dim(const ChoiceDataset& dataset,
                                  const SelectionConfig& config) {
  if (config.d_max < 1) {
    throw Error(ErrorCode::kInvalidArgument, "d_max must be >= 1");
  }
  SelectionResult out;
  std::optional<Error> last_error;
  double best_phi = -std::numeric_limits<double>::infinity();
  double previous_phi = -std::numeric_limits<double>::infinity();
  for (int d = 1; d <= config.d_max; ++d) {
    SelectionRow row;
    row.d = d;
    try {
      auto [model, report] = fit(dataset, d, config.fit);
      row.loo = psis_loo(model, dataset, config.loo_samples,
                         derive_seed(config.fit.seed, 1000 + static_cast<std::uint64_t>(d)),
                         config.fit.threads);
      row.report = std::move(report);
      row.phi = row.loo.phi;
      row.max_khat = row.loo.max_khat();
      row.n_bad_khat = row.loo.bad_khat_count();
      if (row.phi > best_phi) {
        best_phi = row.phi;
        out.best_d = d;
        out.best_model = std::move(model);
      }
    } catch (const Error& e) {
      row.failed = true;
      row.error = std::string(error_code_name(e.code())) + ": " + e.what();
      last_error = e;
    }
    const bool decreased = !row.failed && row.phi < previous_phi;
    if (!row.failed) previous_phi = row.phi;
    out.rows.push_back(std::move(row));
    if (config.early_stop && decreased) break;
  }
  if (out.best_d == 0) {
    if (last_error) throw *last_error;
    throw Error(ErrorCode::kInvalidArgument, "no latent dimension could be fitted");
  }
  return out;
}

}  // namespace choicefn
