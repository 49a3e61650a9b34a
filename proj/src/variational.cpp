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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "choicefn/adam.hpp"
#include "choicefn/errors.hpp"
#include "choicefn/likelihood.hpp"
#include "choicefn/parallel.hpp"
#include "choicefn/random.hpp"

namespace choicefn {

namespace {

using Eigen::Lower;
using Eigen::MatrixXd;
using Eigen::Upper;
using Eigen::VectorXd;

struct KernelForward {
  GramMatrix gram;
  MatrixXd rbf;  // K without jitter; the part that depends on lengthscales
};

KernelForward forward_kernel(const MatrixXd& features,
                             const VectorXd& log_lengthscales, double jitter) {
  KernelParams params{log_lengthscales.array().exp().matrix(), jitter};
  KernelForward out;
  out.gram = gram_matrix(features, params);
  out.rbf = out.gram.matrix;
  out.rbf.diagonal().array() -= out.gram.jitter;
  return out;
}

struct DimForward {
  VectorXd lambda;
  VectorXd mean;
  MatrixXd lc;      // chol(I + L^T diag(lambda) L)
  MatrixXd inv;     // L_C^{-1}
  MatrixXd factor;  // L L_C^{-T}
  double kl = 0.0;
};

DimForward forward_dim(const GramMatrix& gram, const VectorXd& nu,
                       const VectorXd& log_lambda) {
  const MatrixXd& l = gram.lower;
  const Eigen::Index t = l.rows();
  DimForward f;
  f.lambda = log_lambda.array().exp().matrix();
  const MatrixXd scaled =
      l.transpose() * f.lambda.array().sqrt().matrix().asDiagonal();
  MatrixXd c = MatrixXd::Identity(t, t);
  c.selfadjointView<Lower>().rankUpdate(scaled);
  Eigen::LLT<MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kFactorizationFailure,
                "posterior precision factor is not positive definite");
  }
  f.lc = llt.matrixL();
  f.inv = MatrixXd::Identity(t, t);
  f.lc.triangularView<Lower>().solveInPlace(f.inv);
  f.factor.noalias() = l.triangularView<Lower>() * f.inv.transpose();
  f.mean.noalias() = gram.matrix.selfadjointView<Lower>() * nu;
  const double quad = nu.dot(f.mean);
  const double trace = f.inv.squaredNorm();
  const double logdet = 2.0 * f.lc.diagonal().array().log().sum();
  f.kl = 0.5 * (trace + quad - static_cast<double>(t) + logdet);
  return f;
}

// Samples for dimension i: mean + factor * noise, t x S.
MatrixXd draw(const DimForward& f, const MatrixXd& noise) {
  MatrixXd u = f.factor * noise;
  u.colwise() += f.mean;
  return u;
}

void check_noise(const VariationalState& state,
                 const std::vector<MatrixXd>& noise) {
  if (static_cast<int>(noise.size()) != state.latent_dim()) {
    throw Error(ErrorCode::kInvalidArgument, "need one noise block per dim");
  }
  for (const auto& n : noise) {
    if (n.rows() != state.num_objects() || n.cols() < 1) {
      throw Error(ErrorCode::kInvalidArgument, "noise block has wrong shape");
    }
  }
}

std::vector<MatrixXd> draw_noise(const VariationalState& state, int samples,
                                 Rng& rng) {
  std::vector<MatrixXd> noise;
  noise.reserve(static_cast<std::size_t>(state.latent_dim()));
  for (int i = 0; i < state.latent_dim(); ++i) {
    noise.push_back(standard_normal(state.num_objects(), samples, rng));
  }
  return noise;
}

double smoothed(const std::vector<double>& trace, std::size_t end,
                std::size_t window) {
  const std::size_t begin = end >= window ? end - window : 0;
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += trace[i];
  return s / static_cast<double>(end - begin);
}

}  // namespace

double VariationalState::sigma() const { return std::exp(log_sigma); }

Eigen::Index VariationalState::size() const {
  Eigen::Index n = 1;
  for (const auto& v : nu) n += v.size();
  for (const auto& v : log_lambda) n += v.size();
  for (const auto& v : log_lengthscales) n += v.size();
  return n;
}

Eigen::VectorXd VariationalState::pack() const {
  VectorXd flat(size());
  Eigen::Index at = 0;
  auto put = [&](const VectorXd& v) {
    flat.segment(at, v.size()) = v;
    at += v.size();
  };
  for (const auto& v : nu) put(v);
  for (const auto& v : log_lambda) put(v);
  for (const auto& v : log_lengthscales) put(v);
  flat[at] = log_sigma;
  return flat;
}

void VariationalState::unpack(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != size()) {
    throw Error(ErrorCode::kInvalidArgument, "parameter vector size mismatch");
  }
  Eigen::Index at = 0;
  auto take = [&](VectorXd& v) {
    v = flat.segment(at, v.size());
    at += v.size();
  };
  for (auto& v : nu) take(v);
  for (auto& v : log_lambda) take(v);
  for (auto& v : log_lengthscales) take(v);
  log_sigma = flat[at];
}

Eigen::MatrixXd cholesky_backward(const Eigen::MatrixXd& lower,
                                  const Eigen::MatrixXd& d_lower) {
  MatrixXd phi = lower.transpose() * d_lower.triangularView<Lower>();
  phi.triangularView<Eigen::StrictlyUpper>().setZero();
  phi.diagonal() *= 0.5;
  // L^{-T} phi L^{-1}
  lower.transpose().triangularView<Upper>().solveInPlace(phi);
  MatrixXd grad = phi.transpose();
  lower.transpose().triangularView<Upper>().solveInPlace(grad);
  return 0.5 * (grad + grad.transpose());
}

double kl_divergence(const GramMatrix& gram, const Eigen::VectorXd& nu,
                     const Eigen::VectorXd& log_lambda) {
  return forward_dim(gram, nu, log_lambda).kl;
}

ElboTerms elbo_value(const VariationalState& state,
                     const Eigen::MatrixXd& features,
                     const PairEncoding& encoding,
                     const std::vector<Eigen::MatrixXd>& noise, double jitter,
                     int threads) {
  check_noise(state, noise);
  const int d = state.latent_dim();
  std::vector<KernelForward> kernels;
  for (const auto& ls : state.log_lengthscales) {
    kernels.push_back(forward_kernel(features, ls, jitter));
  }
  ElboTerms out;
  std::vector<MatrixXd> samples;
  for (int i = 0; i < d; ++i) {
    const auto iz = static_cast<std::size_t>(i);
    const DimForward f = forward_dim(kernels[state.kernel_of(i)].gram,
                                     state.nu[iz], state.log_lambda[iz]);
    out.kl += f.kl;
    samples.push_back(draw(f, noise[iz]));
  }
  const Eigen::Index s_count = noise[0].cols();
  const double sigma = state.sigma();
  std::vector<double> per_sample(static_cast<std::size_t>(s_count));
  parallel_for(s_count, threads, [&](long s) {
    MatrixXd u(state.num_objects(), d);
    for (int i = 0; i < d; ++i) u.col(i) = samples[static_cast<std::size_t>(i)].col(s);
    per_sample[static_cast<std::size_t>(s)] = log_lik_dataset(encoding, u, sigma);
  });
  for (double v : per_sample) out.expected_log_lik += v;
  out.expected_log_lik /= static_cast<double>(s_count);
  out.value = out.expected_log_lik - out.kl;
  return out;
}

std::pair<ElboTerms, Eigen::VectorXd> elbo_gradient(
    const VariationalState& state, const Eigen::MatrixXd& features,
    const PairEncoding& encoding, const std::vector<Eigen::MatrixXd>& noise,
    double jitter, int threads) {
  check_noise(state, noise);
  const int d = state.latent_dim();
  const Eigen::Index t = state.num_objects();
  const Eigen::Index s_count = noise[0].cols();
  const double inv_s = 1.0 / static_cast<double>(s_count);
  const double sigma = state.sigma();

  std::vector<KernelForward> kernels;
  for (const auto& ls : state.log_lengthscales) {
    kernels.push_back(forward_kernel(features, ls, jitter));
  }
  std::vector<DimForward> dims;
  std::vector<MatrixXd> samples;
  ElboTerms out;
  for (int i = 0; i < d; ++i) {
    const auto iz = static_cast<std::size_t>(i);
    dims.push_back(forward_dim(kernels[state.kernel_of(i)].gram, state.nu[iz],
                               state.log_lambda[iz]));
    out.kl += dims.back().kl;
    samples.push_back(draw(dims.back(), noise[iz]));
  }

  // Likelihood gradients per sample, scattered back into t x S blocks and
  // reduced in sample order.
  std::vector<MatrixXd> g_samples(static_cast<std::size_t>(d),
                                  MatrixXd(t, s_count));
  std::vector<double> values(static_cast<std::size_t>(s_count));
  std::vector<double> sigma_grads(static_cast<std::size_t>(s_count));
  parallel_for(s_count, threads, [&](long s) {
    MatrixXd u(t, d);
    for (int i = 0; i < d; ++i) u.col(i) = samples[static_cast<std::size_t>(i)].col(s);
    const LikelihoodGradient g = grad_log_lik(encoding, u, sigma);
    values[static_cast<std::size_t>(s)] = g.value;
    sigma_grads[static_cast<std::size_t>(s)] = g.d_sigma;
    for (int i = 0; i < d; ++i) {
      g_samples[static_cast<std::size_t>(i)].col(s) = g.d_u.col(i) * inv_s;
    }
  });
  double d_sigma = 0.0;
  for (std::size_t s = 0; s < values.size(); ++s) {
    out.expected_log_lik += values[s];
    d_sigma += sigma_grads[s];
  }
  out.expected_log_lik *= inv_s;
  out.value = out.expected_log_lik - out.kl;

  VariationalState grad = state;
  std::vector<MatrixXd> k_bar(kernels.size(), MatrixXd::Zero(t, t));
  std::vector<MatrixXd> l_bar(kernels.size(), MatrixXd::Zero(t, t));
  for (int i = 0; i < d; ++i) {
    const auto iz = static_cast<std::size_t>(i);
    const DimForward& f = dims[iz];
    const GramMatrix& gram = kernels[state.kernel_of(i)].gram;
    const MatrixXd& l = gram.lower;
    MatrixXd& kb = k_bar[state.kernel_of(i)];
    MatrixXd& lb = l_bar[state.kernel_of(i)];
    const VectorXd& nu = state.nu[iz];

    const VectorXd g_mean = g_samples[iz].rowwise().sum();

    // mean = K nu, and the -1/2 nu^T K nu part of the KL.
    grad.nu[iz] = gram.matrix.selfadjointView<Lower>() * (g_mean - nu);
    kb += 0.5 * (g_mean * nu.transpose() + nu * g_mean.transpose()) -
          0.5 * nu * nu.transpose();

    // With N = L_C^{-1}, factor R = L N^T and the noise-side gradient
    // G Xi^T is rank S; nothing t x t is formed from it until Phi below.
    const MatrixXd& n = f.inv;
    const MatrixXd z = n.transpose().triangularView<Upper>() * noise[iz];
    lb.noalias() += g_samples[iz] * z.transpose();
    const MatrixXd h = l.transpose().triangularView<Upper>() * g_samples[iz];
    const MatrixXd w = n.triangularView<Lower>() * h;
    // Phi(L_C^T dL_C) with dL_C = -Z W^T.
    MatrixXd q = -(noise[iz] * w.transpose());
    q.triangularView<Eigen::StrictlyUpper>().setZero();
    q.diagonal() *= 0.5;
    // dC = N^T Q N with Q = sym(Phi) plus the KL part (N N^T - I) / 2.
    q = 0.5 * (q + q.transpose()).eval();
    MatrixXd nnt = MatrixXd::Zero(t, t);
    nnt.selfadjointView<Lower>().rankUpdate(n);
    nnt.triangularView<Eigen::StrictlyUpper>() = nnt.transpose();
    q += 0.5 * nnt;
    q.diagonal().array() -= 0.5;

    // C = I + L^T diag(lambda) L, so dlambda = diag(R Q R^T) and
    // dL += 2 diag(lambda) R Q N.
    const MatrixXd rq = f.factor * q;
    const VectorXd lambda_bar = (rq.array() * f.factor.array()).rowwise().sum();
    lb.noalias() += 2.0 * f.lambda.asDiagonal() *
                    (rq * n.triangularView<Lower>());
    grad.log_lambda[iz] = lambda_bar.cwiseProduct(f.lambda);
  }

  for (std::size_t k = 0; k < kernels.size(); ++k) {
    k_bar[k] += cholesky_backward(kernels[k].gram.lower, l_bar[k]);
    const VectorXd ls = state.log_lengthscales[k].array().exp().matrix();
    VectorXd& out_ls = grad.log_lengthscales[k];
    out_ls.setZero();
    const MatrixXd weighted = k_bar[k].cwiseProduct(kernels[k].rbf);
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < t; ++j) {
        for (Eigen::Index i = 0; i < t; ++i) {
          const double diff = features(i, c) - features(j, c);
          acc += weighted(i, j) * diff * diff;
        }
      }
      out_ls[c] = acc / (ls[c] * ls[c]);
    }
  }
  grad.log_sigma = d_sigma * inv_s * sigma;
  return {out, grad.pack()};
}

ElboTerms elbo(const VariationalState& state, const Eigen::MatrixXd& features,
               const PairEncoding& encoding, int mc_samples, std::uint64_t seed,
               double jitter, int threads) {
  if (mc_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "mc_samples must be >= 1");
  }
  Rng rng(seed);
  return elbo_value(state, features, encoding,
                    draw_noise(state, mc_samples, rng), jitter, threads);
}

MapObjective map_objective(const PairEncoding& encoding, const GramMatrix& gram,
                           const Eigen::MatrixXd& u, double sigma) {
  const LikelihoodGradient g = grad_log_lik(encoding, u, sigma);
  const Eigen::LLT<MatrixXd> llt(gram.matrix);
  const MatrixXd k_inv_u = llt.solve(u);
  const double logdet = 2.0 * gram.lower.diagonal().array().log().sum();
  MapObjective out;
  out.value = g.value - 0.5 * (u.cwiseProduct(k_inv_u)).sum() -
              0.5 * static_cast<double>(u.cols()) * logdet;
  out.d_u = g.d_u - k_inv_u;
  return out;
}

Eigen::MatrixXd map_estimate(const ChoiceDataset& dataset, int latent_dim,
                             const MapInit& init, int max_iters) {
  if (latent_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "latent dimension must be >= 1");
  }
  const PairEncoding encoding = encode_pairs(dataset);
  const GramMatrix gram = gram_matrix(dataset.objects.features, init.kernel);
  const Eigen::Index t = dataset.objects.size();
  const auto l = gram.lower.triangularView<Lower>();

  // Whitened coordinates u = L a turn the prior into -|a|^2 / 2.
  Rng rng(init.seed);
  MatrixXd a = init.start_scale * standard_normal(t, latent_dim, rng);
  Adam adam(a.size(), AdamOptions{init.learning_rate});
  for (int it = 0; it < max_iters; ++it) {
    const MatrixXd u = l * a;
    const LikelihoodGradient g = grad_log_lik(encoding, u, init.sigma);
    MatrixXd grad = l.transpose() * g.d_u - a;
    if (!grad.allFinite()) {
      throw Error(ErrorCode::kNonFinite,
                  "MAP gradient is not finite; check kernel and sigma");
    }
    Eigen::Map<Eigen::VectorXd> flat(a.data(), a.size());
    adam.ascend(flat, Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size()));
  }
  return l * a;
}

std::pair<FittedModel, FitReport> fit(const ChoiceDataset& dataset,
                                      int latent_dim, const FitConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_dataset(dataset);
  if (latent_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "latent dimension must be >= 1");
  }
  if (config.iters < 0 || config.mc_samples < 1 ||
      !(config.learning_rate > 0.0) || !(config.init_lengthscale > 0.0) ||
      !(config.init_sigma > 0.0) || config.final_elbo_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid fit configuration");
  }
  const CompactDataset compact = compact_dataset(dataset);
  const ChoiceDataset& data = compact.dataset;
  const MatrixXd& x = data.objects.features;
  const Eigen::Index t = x.rows();
  const Eigen::Index c = x.cols();
  const PairEncoding encoding = encode_pairs(data);

  MapInit init;
  init.kernel = KernelParams{VectorXd::Constant(c, config.init_lengthscale),
                             config.jitter};
  init.sigma = std::max(config.init_sigma, kSigmaMin);
  init.learning_rate = config.map_learning_rate;
  init.seed = derive_seed(config.seed, 0);
  const MatrixXd u_map = map_estimate(data, latent_dim, init, config.map_iters);

  VariationalState state;
  const GramMatrix gram = gram_matrix(x, init.kernel);
  for (int i = 0; i < latent_dim; ++i) {
    VectorXd nu = gram.lower.triangularView<Lower>().solve(u_map.col(i));
    gram.lower.transpose().triangularView<Upper>().solveInPlace(nu);
    state.nu.push_back(std::move(nu));
    state.log_lambda.push_back(VectorXd::Zero(t));
  }
  const int kernel_count = config.shared_lengthscales ? 1 : latent_dim;
  for (int k = 0; k < kernel_count; ++k) {
    state.log_lengthscales.push_back(
        VectorXd::Constant(c, std::log(config.init_lengthscale)));
  }
  state.log_sigma = std::log(init.sigma);

  FitReport report;
  report.seed = config.seed;
  Rng rng(derive_seed(config.seed, 1));
  VectorXd theta = state.pack();
  Adam adam(theta.size(), AdamOptions{config.learning_rate});
  const Eigen::Index sigma_at = theta.size() - 1;
  const double log_sigma_min = std::log(kSigmaMin);
  for (int it = 0; it < config.iters; ++it) {
    const auto noise = draw_noise(state, config.mc_samples, rng);
    auto [terms, grad] = elbo_gradient(state, x, encoding, noise, config.jitter,
                                       config.threads);
    if (!std::isfinite(terms.value) || !grad.allFinite()) {
      throw Error(ErrorCode::kNonFinite,
                  "ELBO or its gradient is not finite at iteration " +
                      std::to_string(it));
    }
    report.elbo_trace.push_back(terms.value);
    adam.ascend(theta, grad);
    theta[sigma_at] = std::max(theta[sigma_at], log_sigma_min);
    state.unpack(theta);
    ++report.iterations;
  }

  const auto n = report.elbo_trace.size();
  const auto window = static_cast<std::size_t>(std::max(config.smoothing_window, 1));
  const auto horizon = static_cast<std::size_t>(std::max(config.convergence_horizon, 1));
  if (n >= horizon + window) {
    const double now = smoothed(report.elbo_trace, n, window);
    const double before = smoothed(report.elbo_trace, n - horizon, window);
    report.converged =
        (now - before) / std::max(std::abs(before), 1e-12) < config.convergence_tol;
  }
  report.max_iters_no_improvement = !report.converged;

  report.final_elbo = elbo(state, x, encoding, config.final_elbo_samples,
                           derive_seed(config.seed, 2), config.jitter, config.threads)
                          .value;
  report.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return {FittedModel(x, std::move(state), config.jitter, compact.kept),
          std::move(report)};
}

FittedModel::FittedModel(Eigen::MatrixXd features, VariationalState state,
                         double jitter, std::vector<Index> training_index)
    : features_(std::move(features)),
      state_(std::move(state)),
      jitter_(jitter),
      training_index_(std::move(training_index)) {
  if (state_.latent_dim() < 1 || state_.num_objects() != features_.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                "variational state does not match the training objects");
  }
  if (training_index_.empty()) {
    training_index_.resize(static_cast<std::size_t>(features_.rows()));
    std::iota(training_index_.begin(), training_index_.end(), Index{0});
  }
  if (static_cast<Index>(training_index_.size()) != features_.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                "training index needs one entry per training object");
  }
  for (const auto& ls : state_.log_lengthscales) {
    gram_.push_back(gram_matrix(
        features_, KernelParams{ls.array().exp().matrix(), jitter_}));
  }
  mean_.resize(features_.rows(), latent_dim());
  for (int i = 0; i < latent_dim(); ++i) {
    const auto iz = static_cast<std::size_t>(i);
    DimForward f = forward_dim(gram_[state_.kernel_of(i)], state_.nu[iz],
                               state_.log_lambda[iz]);
    mean_.col(i) = f.mean;
    factor_.push_back(std::move(f.factor));
  }
}

KernelParams FittedModel::kernel(int dim) const {
  return KernelParams{
      state_.log_lengthscales[state_.kernel_of(dim)].array().exp().matrix(),
      jitter_};
}

Eigen::MatrixXd FittedModel::posterior_covariance(int dim) const {
  const MatrixXd& r = covariance_factor(dim);
  return r * r.transpose();
}

std::vector<Eigen::MatrixXd> FittedModel::sample_posterior(
    int n, std::uint64_t seed) const {
  Rng rng(seed);
  const int d = latent_dim();
  std::vector<MatrixXd> per_dim;
  for (int i = 0; i < d; ++i) {
    MatrixXd u = covariance_factor(i) * standard_normal(num_objects(), n, rng);
    u.colwise() += mean_.col(i);
    per_dim.push_back(std::move(u));
  }
  std::vector<MatrixXd> out(static_cast<std::size_t>(n),
                            MatrixXd(num_objects(), d));
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < d; ++i) {
      out[static_cast<std::size_t>(s)].col(i) =
          per_dim[static_cast<std::size_t>(i)].col(s);
    }
  }
  return out;
}

PairEncoding FittedModel::encode(const ChoiceDataset& dataset) const {
  std::map<Index, Index> rows;
  for (std::size_t i = 0; i < training_index_.size(); ++i) {
    rows.emplace(training_index_[i], static_cast<Index>(i));
  }
  ChoiceDataset mapped;
  mapped.objects.features = features_;
  for (const auto& obs : dataset.observations) {
    ChoiceObservation m;
    auto remap = [&](Index v) {
      const auto it = rows.find(v);
      if (it == rows.end() || v >= dataset.objects.size() ||
          dataset.objects.features.row(v) != features_.row(it->second)) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "object " + std::to_string(v) +
                        " is not a training object of this model");
      }
      return it->second;
    };
    for (Index v : obs.set) m.set.push_back(remap(v));
    for (Index v : obs.chosen) m.chosen.push_back(remap(v));
    mapped.observations.push_back(std::move(m));
  }
  return encode_pairs(mapped);
}

}  // namespace choicefn
