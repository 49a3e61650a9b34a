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

#include "choicefn/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "choicefn/errors.hpp"
#include "choicefn/normal.hpp"

namespace choicefn {

namespace {

const double kLogEps = std::log(kProbabilityClamp);
const double kLog1mEps = std::log1p(-kProbabilityClamp);

// Returns the clamped log value and whether the clamp was active.
std::pair<double, bool> clamp_log(double log_value, bool clamp) {
  if (!clamp) return {log_value, false};
  if (!(log_value > kLogEps)) return {kLogEps, true};
  if (log_value > kLog1mEps) return {kLog1mEps, true};
  return {log_value, false};
}

// Beyond this |z| the plain-probability path can underflow; fall back to
// log space.
constexpr double kDirectCut = 30.0;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Phi(z), Phi(-z) and phi(z) from one erfc: the smaller tail is computed
// directly and the larger one as its complement.
inline void probit(double z, double* cdf, double* ccdf, double* density) {
  const double tail = 0.5 * std::erfc(std::abs(z) * kInvSqrt2);
  *cdf = z >= 0.0 ? 1.0 - tail : tail;
  *ccdf = z >= 0.0 ? tail : 1.0 - tail;
  *density = kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

// Per-coordinate scratch shared by the value and gradient passes.
struct Scratch {
  std::vector<double> z;
  std::vector<double> m_plus;   // phi(z) / Phi(z)
  std::vector<double> m_minus;  // phi(z) / Phi(-z)
  std::vector<double> dom;      // P(o dom v) per chosen o
  std::vector<double> log_not;  // log(1 - P(o dom v))
  std::vector<double> work_p;   // per-coordinate factors awaiting reduction
  std::vector<double> work_q;
};

// Products and sums over latent coordinates are taken in sorted order so the
// result is bitwise invariant to permuting the columns of u.
double ordered_product(double* first, std::size_t n) {
  std::sort(first, first + n);
  double out = 1.0;
  for (std::size_t i = 0; i < n; ++i) out *= first[i];
  return out;
}

double ordered_sum(double* first, std::size_t n) {
  std::sort(first, first + n);
  double out = 0.0;
  for (std::size_t i = 0; i < n; ++i) out += first[i];
  return out;
}

Scratch& scratch(std::size_t coords, std::size_t chosen) {
  thread_local Scratch s;
  if (s.z.size() < coords) {
    s.z.resize(coords);
    s.work_p.resize(coords);
    s.work_q.resize(coords);
    s.m_plus.resize(coords);
    s.m_minus.resize(coords);
  }
  if (s.dom.size() < chosen) {
    s.dom.resize(chosen);
    s.log_not.resize(chosen);
  }
  return s;
}

// Accumulates one incomparability factor. `grad` may be null.
double incomparability_term(const Eigen::MatrixXd& u, Index a, Index b,
                            double sigma, bool clamp, Eigen::MatrixXd* grad,
                            double* d_sigma) {
  const auto d = static_cast<std::size_t>(u.cols());
  Scratch& s = scratch(d, 0);
  bool direct = true;
  for (std::size_t i = 0; i < d; ++i) {
    const auto col = static_cast<Index>(i);
    s.z[i] = (u(a, col) - u(b, col)) / sigma;
    direct = direct && std::abs(s.z[i]) <= kDirectCut;
  }
  double p;
  double q;
  if (direct) {
    for (std::size_t i = 0; i < d; ++i) {
      double c, cc, dens;
      probit(s.z[i], &c, &cc, &dens);
      s.work_p[i] = c;
      s.work_q[i] = cc;
      s.m_plus[i] = dens / c;
      s.m_minus[i] = dens / cc;
    }
    p = ordered_product(s.work_p.data(), d);
    q = ordered_product(s.work_q.data(), d);
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      s.work_p[i] = normal::log_cdf_mills(s.z[i], &s.m_plus[i]);
      s.work_q[i] = normal::log_cdf_mills(-s.z[i], &s.m_minus[i]);
    }
    p = std::exp(ordered_sum(s.work_p.data(), d));
    q = std::exp(ordered_sum(s.work_q.data(), d));
  }
  const double f = 1.0 - p - q;
  const double raw = f > 0.0 ? std::log(f) : -INFINITY;
  const auto [value, clamped] = clamp_log(raw, clamp);
  if (grad == nullptr || clamped) return value;
  for (std::size_t i = 0; i < d; ++i) {
    const double z = s.z[i];
    const double dfdz = (-p * s.m_plus[i] + q * s.m_minus[i]) / f;
    const auto col = static_cast<Index>(i);
    (*grad)(a, col) += dfdz / sigma;
    (*grad)(b, col) -= dfdz / sigma;
    *d_sigma -= dfdz * z / sigma;
  }
  return value;
}

double rejection_term(const Eigen::MatrixXd& u, const RejectionGroup& group,
                      double sigma, bool clamp, Eigen::MatrixXd* grad,
                      double* d_sigma) {
  const auto d = static_cast<std::size_t>(u.cols());
  const Index v = group.rejected;
  const std::size_t n_chosen = group.chosen.size();
  Scratch& s = scratch(d * n_chosen, n_chosen);
  // log prod_o (1 - P(o dom v))
  double log_survive = 0.0;
  for (std::size_t j = 0; j < n_chosen; ++j) {
    const Index o = group.chosen[j];
    double* z = &s.z[j * d];
    double* mills = &s.m_plus[j * d];
    bool direct = true;
    for (std::size_t i = 0; i < d; ++i) {
      const auto col = static_cast<Index>(i);
      z[i] = (u(o, col) - u(v, col)) / sigma;
      direct = direct && std::abs(z[i]) <= kDirectCut;
    }
    if (direct) {
      for (std::size_t i = 0; i < d; ++i) {
        double c, cc, dens;
        probit(z[i], &c, &cc, &dens);
        s.work_p[i] = c;
        mills[i] = dens / c;
      }
      const double prob = ordered_product(s.work_p.data(), d);
      s.dom[j] = prob;
      s.log_not[j] = std::log1p(-prob);
    } else {
      for (std::size_t i = 0; i < d; ++i) {
        s.work_p[i] = normal::log_cdf_mills(z[i], &mills[i]);
      }
      const double lp = ordered_sum(s.work_p.data(), d);
      s.dom[j] = std::exp(lp);
      s.log_not[j] = normal::log1mexp(lp);
    }
    log_survive += s.log_not[j];
  }
  const double raw = normal::log1mexp(log_survive);
  const auto [value, clamped] = clamp_log(raw, clamp);
  if (grad == nullptr || clamped) return value;
  for (std::size_t j = 0; j < n_chosen; ++j) {
    const Index o = group.chosen[j];
    // d log G / d log P(o dom v)
    const double coeff =
        s.dom[j] * std::exp(log_survive - s.log_not[j] - raw);
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t at = j * d + i;
      const double z = s.z[at];
      const double g = coeff * s.m_plus[at];
      const auto col = static_cast<Index>(i);
      (*grad)(o, col) += g / sigma;
      (*grad)(v, col) -= g / sigma;
      *d_sigma -= g * z / sigma;
    }
  }
  return value;
}

double observation_term(const PairEncoding& enc, std::size_t k,
                        const Eigen::MatrixXd& u, double sigma, bool clamp,
                        Eigen::MatrixXd* grad, double* d_sigma) {
  const auto& span = enc.observation_spans[k];
  double total = 0.0;
  for (std::size_t p = span.pair_begin; p < span.pair_end; ++p) {
    const auto& [a, b] = enc.incomparability_pairs[p];
    total += incomparability_term(u, a, b, sigma, clamp, grad, d_sigma);
  }
  for (std::size_t g = span.group_begin; g < span.group_end; ++g) {
    total += rejection_term(u, enc.rejection_groups[g], sigma, clamp, grad,
                            d_sigma);
  }
  return total;
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  }
}

struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized to sum to 1
};

// Golub-Welsch on the physicists' Hermite recurrence.
GaussHermite make_gauss_hermite(int order) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(0.5 * i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermite rule;
  for (int i = 0; i < order; ++i) {
    rule.nodes.push_back(eig.eigenvalues()[i]);
    const double v = eig.eigenvectors()(0, i);
    rule.weights.push_back(v * v);
  }
  return rule;
}

const GaussHermite& gauss_hermite(int order) {
  static std::mutex mutex;
  static std::map<int, GaussHermite> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) {
    it = cache.emplace(order, make_gauss_hermite(order)).first;
  }
  return it->second;
}

}  // namespace

double dominance_prob(const Eigen::Ref<const Eigen::VectorXd>& o_utils,
                      const Eigen::Ref<const Eigen::VectorXd>& v_utils,
                      double sigma) {
  check_sigma(sigma);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < o_utils.size(); ++i) {
    lp += normal::log_cdf((o_utils[i] - v_utils[i]) / sigma);
  }
  return std::exp(lp);
}

double log_lik_observation(const PairEncoding& encoding, std::size_t k,
                           const Eigen::MatrixXd& u, double sigma,
                           LikelihoodOptions options) {
  check_sigma(sigma);
  return observation_term(encoding, k, u, sigma, options.clamp, nullptr,
                          nullptr);
}

double log_lik_observation(const ChoiceObservation& observation,
                           const Eigen::MatrixXd& u, double sigma,
                           LikelihoodOptions options) {
  ChoiceDataset single;
  single.observations.push_back(observation);
  return log_lik_observation(encode_pairs(single), 0, u, sigma, options);
}

Eigen::VectorXd log_lik_per_observation(const PairEncoding& encoding,
                                        const Eigen::MatrixXd& u, double sigma,
                                        LikelihoodOptions options) {
  check_sigma(sigma);
  Eigen::VectorXd out(static_cast<Eigen::Index>(encoding.num_observations()));
  for (std::size_t k = 0; k < encoding.num_observations(); ++k) {
    out[static_cast<Eigen::Index>(k)] = observation_term(
        encoding, k, u, sigma, options.clamp, nullptr, nullptr);
  }
  return out;
}

double log_lik_dataset(const PairEncoding& encoding, const Eigen::MatrixXd& u,
                       double sigma, LikelihoodOptions options) {
  check_sigma(sigma);
  double total = 0.0;
  for (std::size_t k = 0; k < encoding.num_observations(); ++k) {
    total += observation_term(encoding, k, u, sigma, options.clamp, nullptr,
                              nullptr);
  }
  return total;
}

double log_lik_dataset(const ChoiceDataset& dataset, const Eigen::MatrixXd& u,
                       double sigma, LikelihoodOptions options) {
  return log_lik_dataset(encode_pairs(dataset), u, sigma, options);
}

LikelihoodGradient grad_log_lik(const PairEncoding& encoding,
                                const Eigen::MatrixXd& u, double sigma) {
  check_sigma(sigma);
  LikelihoodGradient out;
  out.d_u = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  for (std::size_t k = 0; k < encoding.num_observations(); ++k) {
    out.value += observation_term(encoding, k, u, sigma, /*clamp=*/true,
                                  &out.d_u, &out.d_sigma);
  }
  return out;
}

double probit_product(double o_util, std::span<const double> rejected_utils,
                      double sigma) {
  check_sigma(sigma);
  double lp = 0.0;
  for (double v : rejected_utils) lp += normal::log_cdf((o_util - v) / sigma);
  return std::exp(lp);
}

double batch_likelihood(double o_util, std::span<const double> rejected_utils,
                        double sigma, int quadrature_order) {
  check_sigma(sigma);
  if (quadrature_order < 16) {
    throw Error(ErrorCode::kInvalidArgument, "quadrature order must be >= 16");
  }
  const GaussHermite& rule = gauss_hermite(quadrature_order);
  // w = sqrt(2) sigma x turns N(w; 0, sigma^2) dw into exp(-x^2) dx / sqrt(pi).
  double total = 0.0;
  for (std::size_t n = 0; n < rule.nodes.size(); ++n) {
    const double shift = std::numbers::sqrt2 * rule.nodes[n];
    double lp = 0.0;
    for (double v : rejected_utils) {
      lp += normal::log_cdf((o_util - v) / sigma + shift);
    }
    total += rule.weights[n] * std::exp(lp);
  }
  return total;
}

}  // namespace choicefn
