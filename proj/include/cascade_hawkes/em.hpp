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

#ifndef CASCADE_HAWKES_EM_HPP_
#define CASCADE_HAWKES_EM_HPP_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade_hawkes/types.hpp"

namespace cascade_hawkes {

// All candidate terms of an E-step row were zero.
class DegenerateParamsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The weighted arrival-scale score has no sign change on (0, inf).
class NonBracketableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class HistoryMode { Full, NetworkRestricted };

// Which events may be attributed to the background process.
//   AnyEvent:      every event competes with its ancestors (type blind).
//   OriginalsOnly: originals are immigrants and descendants are always
//                  offspring, since the immigrant process emits originals
//                  only and offspring are never originals.  A descendant
//                  with no admissible ancestor falls back to the background.
enum class ImmigrantRule { AnyEvent, OriginalsOnly };

// How the integrated excitation of each event enters Q and the M-step.
//   Untruncated: each event's kernel integrates to one (exp(-w(T - t)) ~ 0).
//   Exact:       the kernel is cut at T; omega and delta use the exact
//                first-order conditions.
enum class CompensatorForm { Untruncated, Exact };

// Posterior attribution of each event, stored as flat rows: event j owns the
// ancestor entries [offsets[j], offsets[j+1]).
struct Responsibilities {
  std::vector<double> immigrant;  // p_jj
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> ancestor;  // l
  std::vector<double> weight;         // p_jl

  std::size_t size() const { return immigrant.size(); }
  std::span<const std::size_t> ancestors_of(std::size_t j) const {
    return {ancestor.data() + offsets[j], offsets[j + 1] - offsets[j]};
  }
  std::span<const double> weights_of(std::size_t j) const {
    return {weight.data() + offsets[j], offsets[j + 1] - offsets[j]};
  }
  // max_j |p_jj + sum_l p_jl - 1|
  double max_normalization_error() const;
  // -sum p log p over every entry.
  double entropy() const;
};

struct EStepOptions {
  HistoryMode history = HistoryMode::Full;
  ImmigrantRule immigrant_rule = ImmigrantRule::OriginalsOnly;
  RetweetAttribution retweet_attribution = RetweetAttribution::InheritedStance;
  unsigned threads = 1;
};

Responsibilities e_step(const ModelParams& params, const Cascade& cascade,
                        const EStepOptions& options = {});

struct MStepResult {
  ModelParams params;
  std::vector<std::string> retained;  // families kept at their previous value
};

MStepResult m_step(const Responsibilities& resp, const Cascade& cascade, const ModelParams& prev,
                   CompensatorForm form = CompensatorForm::Untruncated, double x_tol = 1e-10,
                   RetweetAttribution attribution = RetweetAttribution::InheritedStance);

// Maximizer over x of sum_j p_jj log f(t_j; x, T).  Throws NonBracketableError
// when the weighted mean immigrant time is not inside (0, T/2).
double solve_x(const Responsibilities& resp, const Cascade& cascade, double horizon,
               double tol = 1e-10);
// Same, from the weighted mean arrival time directly.
double solve_x_from_mean(double weighted_mean, double horizon, double tol = 1e-10);

// Expected complete-data log-likelihood, up to an additive constant.  The
// stance-transition factor enters only through quote and reply children,
// matching the restricted gamma update.
double q_value(const ModelParams& params, const Responsibilities& resp, const Cascade& cascade,
               CompensatorForm form = CompensatorForm::Untruncated,
               RetweetAttribution attribution = RetweetAttribution::InheritedStance);

enum class InitPolicy { Default };

ModelParams param_init(const Cascade& cascade, InitPolicy policy = InitPolicy::Default);

struct EMConfig {
  double epsilon = 1e-6;
  std::size_t max_iters = 500;
  HistoryMode history = HistoryMode::Full;
  ImmigrantRule immigrant_rule = ImmigrantRule::OriginalsOnly;
  RetweetAttribution retweet_attribution = RetweetAttribution::InheritedStance;
  InitPolicy init = InitPolicy::Default;
  std::optional<ModelParams> initial;  // overrides `init` when set
  double x_solver_tol = 1e-10;
  CompensatorForm compensator = CompensatorForm::Untruncated;
  unsigned threads = 1;
};

struct FitReport {
  ModelParams params;
  // Q(new params) plus the entropy of the responsibilities that produced
  // them: the EM lower bound, which never decreases across iterations.
  std::vector<double> q_trace;
  // Q(new params) - Q(old params) under the same responsibilities.
  std::vector<double> m_step_gain;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double max_normalization_error = 0.0;
  std::vector<std::string> retained;
  std::string diagnostic;
};

FitReport fit(const Cascade& cascade, const EMConfig& config = {});

}  // namespace cascade_hawkes

#endif  // CASCADE_HAWKES_EM_HPP_
