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

#include "cascade_hawkes/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cascade_hawkes {

double TruncatedExponential::pdf(double t) const {
  return std::exp(-t / scale) / (scale * -std::expm1(-upper / scale));
}

double TruncatedExponential::log_pdf(double t) const {
  return -std::log(scale) - t / scale - std::log(-std::expm1(-upper / scale));
}

double TruncatedExponential::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= upper) return 1.0;
  return std::expm1(-t / scale) / std::expm1(-upper / scale);
}

double TruncatedExponential::mean() const {
  // x - T / (e^{T/x} - 1); the correction vanishes once e^{T/x} overflows.
  return scale - upper / std::expm1(upper / scale);
}

TruncatedExponential arrival_profile(const ModelParams& params) {
  return {params.x_scale, params.horizon};
}

double reach_weight(const FollowerGraph& graph, std::string_view observer, const Event& event,
                    std::optional<std::string_view> parent_author, double beta_follow,
                    double beta_reply_view) {
  const UserIndex obs = graph.require(observer);
  const UserIndex author = graph.require(event.user);
  if (graph.follows(obs, author)) return beta_follow;
  if (event.type == TweetType::Reply && parent_author) {
    const UserIndex pa = graph.require(*parent_author);
    if (graph.follows(obs, pa)) return beta_reply_view;
  }
  return 0.0;
}

double event_reach(const FollowerGraph& graph, const Event& event,
                   std::optional<std::string_view> parent_author, double beta_follow,
                   double beta_reply_view) {
  const UserIndex author = graph.require(event.user);
  auto direct = graph.followers(author);
  double n = beta_follow * static_cast<double>(direct.size());
  if (event.type != TweetType::Reply || !parent_author) return n;
  auto pa = graph.find(*parent_author);
  if (!pa) return n;
  // Reply viewers: followers of the parent author not already direct followers.
  auto viewers = graph.followers(*pa);
  std::size_t extra = 0;
  auto it = direct.begin();
  for (UserIndex v : viewers) {
    while (it != direct.end() && *it < v) ++it;
    if (it == direct.end() || *it != v) ++extra;
  }
  return n + beta_reply_view * static_cast<double>(extra);
}

namespace {

void check_time(const ModelParams& params, double t) {
  if (!(t >= 0.0 && t <= params.horizon)) {
    std::ostringstream os;
    os << "time " << t << " outside [0, " << params.horizon << "]";
    throw std::domain_error(os.str());
  }
}

// Number of events strictly before t.
std::size_t history_end(const Cascade& cascade, double t) {
  const auto& ev = cascade.events();
  auto it = std::lower_bound(ev.begin(), ev.end(), t,
                             [](const Event& e, double v) { return e.time < v; });
  return static_cast<std::size_t>(it - ev.begin());
}

double excitation(const ModelParams& params, const Cascade& cascade, Stance k, double t,
                  RetweetAttribution attribution) {
  const double w = params.omega_of(k);
  double sum = 0.0;
  const std::size_t end = history_end(cascade, t);
  for (std::size_t l = 0; l < end; ++l) {
    const Event& e = cascade[l];
    sum += excitation_mass(params, e, k, attribution) * w * std::exp(-w * (t - e.time));
  }
  return sum;
}

// Exponentially decayed excitation mass per stance, advanced event by event.
// Events sharing a timestamp do not excite one another.
class DecayedMass {
 public:
  DecayedMass(const ModelParams& params, RetweetAttribution attribution)
      : params_(params), attribution_(attribution) {}

  // Moves the state to time t (>= current time).
  void advance(double t) {
    if (t > now_) {
      for (std::size_t k = 0; k < kNumStances; ++k) {
        decayed_[k] = (decayed_[k] + pending_[k]) * std::exp(-params_.omega[k] * (t - now_));
        total_[k] += pending_[k];
        pending_[k] = 0.0;
      }
      now_ = t;
    }
  }

  void add(const Event& e) {
    for (Stance k : kStances) pending_[index_of(k)] += excitation_mass(params_, e, k, attribution_);
  }

  // Excitation rate for stance k from events strictly before now.
  double rate(Stance k) const { return params_.omega_of(k) * decayed_[index_of(k)]; }

  // Integrated excitation up to now, over all stances.
  double integrated() const {
    double s = 0.0;
    for (std::size_t k = 0; k < kNumStances; ++k) s += total_[k] - decayed_[k];
    return s;
  }

 private:
  const ModelParams& params_;
  RetweetAttribution attribution_;
  double now_ = 0.0;
  std::array<double, kNumStances> decayed_{};
  std::array<double, kNumStances> pending_{};
  std::array<double, kNumStances> total_{};
};

double immigrant_mass(const ModelParams& params) {
  double s = 0.0;
  for (double m : params.mu) s += m;
  return s * params.horizon;
}

}  // namespace

double immigrant_intensity(const ModelParams& params, Stance stance, double t) {
  check_time(params, t);
  return params.mu_of(stance) * params.horizon * arrival_profile(params).pdf(t);
}

double stance_intensity(const ModelParams& params, const Cascade& cascade, Stance stance,
                        double t, RetweetAttribution attribution) {
  return immigrant_intensity(params, stance, t) +
         excitation(params, cascade, stance, t, attribution);
}

IntensityBreakdown total_intensity(const ModelParams& params, const Cascade& cascade, double t,
                                   RetweetAttribution attribution) {
  IntensityBreakdown out;
  for (Stance k : kStances) {
    const std::size_t i = index_of(k);
    out.immigrant[i] = immigrant_intensity(params, k, t);
    out.excitation[i] = excitation(params, cascade, k, t, attribution);
    out.total += out.immigrant[i] + out.excitation[i];
  }
  return out;
}

double compensator(const ModelParams& params, const Cascade& cascade, double t,
                   RetweetAttribution attribution) {
  check_time(params, t);
  double lambda = immigrant_mass(params) * arrival_profile(params).cdf(t);
  const std::size_t end = history_end(cascade, t);
  for (std::size_t l = 0; l < end; ++l) {
    const Event& e = cascade[l];
    for (Stance k : kStances) {
      lambda += excitation_mass(params, e, k, attribution) * -std::expm1(-params.omega_of(k) * (t - e.time));
    }
  }
  return lambda;
}

std::vector<double> compensator_at_events(const ModelParams& params, const Cascade& cascade,
                                          RetweetAttribution attribution) {
  params.validate();
  const TruncatedExponential profile = arrival_profile(params);
  const double mass = immigrant_mass(params);
  DecayedMass state(params, attribution);
  std::vector<double> out;
  out.reserve(cascade.size());
  for (const Event& e : cascade.events()) {
    check_time(params, e.time);
    state.advance(e.time);
    out.push_back(mass * profile.cdf(e.time) + state.integrated());
    state.add(e);
  }
  return out;
}

double log_likelihood(const ModelParams& params, const Cascade& cascade,
                      RetweetAttribution attribution) {
  params.validate();
  const TruncatedExponential profile = arrival_profile(params);
  DecayedMass state(params, attribution);
  double sum_log = 0.0;
  for (const Event& e : cascade.events()) {
    check_time(params, e.time);
    state.advance(e.time);
    const double lambda =
        params.mu_of(e.stance) * params.horizon * profile.pdf(e.time) + state.rate(e.stance);
    if (!(lambda > 0.0)) {
      throw std::domain_error("non-positive intensity at event " + e.id);
    }
    sum_log += std::log(lambda);
    state.add(e);
  }
  // Remaining compensator mass through T.
  double integrated = immigrant_mass(params);
  for (const Event& e : cascade.events()) {
    for (Stance k : kStances) {
      integrated += excitation_mass(params, e, k, attribution) *
                    -std::expm1(-params.omega_of(k) * (params.horizon - e.time));
    }
  }
  return sum_log - integrated;
}

}  // namespace cascade_hawkes
