// Copyright 2026 The cascade-hawkes Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CASCADE_HAWKES_GOODNESS_OF_FIT_HPP_
#define CASCADE_HAWKES_GOODNESS_OF_FIT_HPP_

#include <span>
#include <vector>

#include "cascade_hawkes/types.hpp"

namespace cascade_hawkes {

// Lambda(t_1) - Lambda(0), Lambda(t_2) - Lambda(t_1), ...  Under a correctly
// specified model these are i.i.d. Exp(1).
std::vector<double> rescaled_interarrivals(
    const ModelParams& params, const Cascade& cascade,
    RetweetAttribution attribution = RetweetAttribution::InheritedStance);

// P(D_n < d) for the one-sample Kolmogorov-Smirnov statistic (Marsaglia,
// Tsang and Wang), with their large-sample shortcut.
double kolmogorov_cdf(std::size_t n, double d);

struct KsResult {
  std::size_t n = 0;
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sided one-sample test against Exp(1).
KsResult ks_test_exponential(std::span<const double> samples);

}  // namespace cascade_hawkes

#endif  // CASCADE_HAWKES_GOODNESS_OF_FIT_HPP_
