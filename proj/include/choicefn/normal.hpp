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

// Standard-normal helpers that stay finite in the far tails.

#ifndef CHOICEFN_NORMAL_HPP_
#define CHOICEFN_NORMAL_HPP_

namespace choicefn::normal {

double pdf(double z);
double cdf(double z);
double log_cdf(double z);

// phi(z) / Phi(z), the inverse Mills ratio; ~ -z for z -> -inf.
double mills(double z);

// log Phi(z), storing phi(z) / Phi(z) in *mills_out; one erfc call.
double log_cdf_mills(double z, double* mills_out);

// log(1 - exp(x)) for x <= 0.
double log1mexp(double x);

}  // namespace choicefn::normal

#endif  // CHOICEFN_NORMAL_HPP_
