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

#include "choicefn/normal.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace choicefn::normal {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
// Below this erfc loses everything; switch to the asymptotic series.
constexpr double kTailCut = -30.0;

// log Phi(z) for z << 0 from the Mills-ratio asymptotic expansion.
double log_cdf_tail(double z) {
  const double z2 = z * z;
  const double inv = 1.0 / z2;
  const double series =
      1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log(series);
}

}  // namespace

double pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

double cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double log_cdf(double z) {
  if (z < kTailCut) return log_cdf_tail(z);
  if (z > 5.0) return std::log1p(-0.5 * std::erfc(z * kInvSqrt2));
  return std::log(0.5 * std::erfc(-z * kInvSqrt2));
}

double mills(double z) {
  if (z < kTailCut) {
    // phi/Phi = exp(log phi - log Phi); both sides from the series.
    return std::exp(-0.5 * z * z - kLogSqrt2Pi - log_cdf_tail(z));
  }
  return std::exp(-0.5 * z * z - kLogSqrt2Pi - log_cdf(z));
}

double log_cdf_mills(double z, double* mills_out) {
  const double lc = log_cdf(z);
  *mills_out = std::exp(-0.5 * z * z - kLogSqrt2Pi - lc);
  return lc;
}

double log1mexp(double x) {
  if (x >= 0.0) return -std::numeric_limits<double>::infinity();
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

}  // namespace choicefn::normal
