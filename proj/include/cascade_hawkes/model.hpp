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

#ifndef CASCADE_HAWKES_MODEL_HPP_
#define CASCADE_HAWKES_MODEL_HPP_

#include <array>
#include <optional>
#include <string_view>

#include "cascade_hawkes/types.hpp"

namespace cascade_hawkes {

// Exponential distribution with the given scale, truncated to [0, upper].
struct TruncatedExponential {
  double scale;
  double upper;

  double pdf(double t) const;
  double log_pdf(double t) const;
  double cdf(double t) const;
  double mean() const;
};

TruncatedExponential arrival_profile(const ModelParams& params);

// Audience weight of `observer` for `event`:
//   beta_follow      if observer follows the event's author,
//   beta_reply_view  else if the event is a reply and observer follows parent_author,
//   0                otherwise.
// Throws UnknownUserError for ids outside the graph.
double reach_weight(const FollowerGraph& graph, std::string_view observer, const Event& event,
                    std::optional<std::string_view> parent_author,
                    double beta_follow = 0.95, double beta_reply_view = 0.05);

// n_j: the sum of reach_weight over every user in the graph.  A parent author
// missing from the graph contributes nothing.
double event_reach(const FollowerGraph& graph, const Event& event,
                   std::optional<std::string_view> parent_author,
                   double beta_follow = 0.95, double beta_reply_view = 0.05);

// mu_k * T * f(t), f the truncated-exponential arrival density.
// Throws std::domain_error for t outside [0, T].
double immigrant_intensity(const ModelParams& params, Stance stance, double t);

// lambda_k(t): immigrant term plus excitation from events strictly before t.
// Every excitation-dependent function takes the stance coupling of children;
// the default matches the simulator.
double stance_intensity(const ModelParams& params, const Cascade& cascade, Stance stance,
                        double t, RetweetAttribution attribution = RetweetAttribution::InheritedStance);

struct IntensityBreakdown {
  std::array<double, kNumStances> immigrant{};
  std::array<double, kNumStances> excitation{};
  double total = 0.0;

  double stance_total(Stance k) const {
    return immigrant[index_of(k)] + excitation[index_of(k)];
  }
};

IntensityBreakdown total_intensity(const ModelParams& params, const Cascade& cascade, double t,
                                   RetweetAttribution attribution = RetweetAttribution::InheritedStance);

// Lambda(t) = integral of the total intensity over [0, t].
double compensator(const ModelParams& params, const Cascade& cascade, double t,
                   RetweetAttribution attribution = RetweetAttribution::InheritedStance);

// Lambda evaluated at every event time, in cascade order.  O(N).
std::vector<double> compensator_at_events(const ModelParams& params, const Cascade& cascade,
                                          RetweetAttribution attribution = RetweetAttribution::InheritedStance);

// Stance-marked log-likelihood: sum_j log lambda_{k_j}(t_j) - Lambda(T).
// Throws std::domain_error if some lambda_{k_j}(t_j) <= 0.
double log_likelihood(const ModelParams& params, const Cascade& cascade,
                      RetweetAttribution attribution = RetweetAttribution::InheritedStance);

// Probability that a child of a `from` event has stance `to`.
inline double child_stance_probability(const ModelParams& params, Stance from, Stance to,
                                       RetweetAttribution attribution = RetweetAttribution::InheritedStance) {
  if (attribution == RetweetAttribution::StanceTransition) return params.gamma_of(from, to);
  const double p_ret = params.p_of(TweetType::Retweet);
  return p_ret * (from == to ? 1.0 : 0.0) + (1.0 - p_ret) * params.gamma_of(from, to);
}

// delta_{r_l} * n_l * P(child stance k): mass event l sends to stance k.
inline double excitation_mass(const ModelParams& params, const Event& ancestor, Stance to,
                              RetweetAttribution attribution = RetweetAttribution::InheritedStance) {
  return params.delta_of(ancestor.type) *
         child_stance_probability(params, ancestor.stance, to, attribution) * ancestor.reach;
}

}  // namespace cascade_hawkes

#endif  // CASCADE_HAWKES_MODEL_HPP_
