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

#include "cascade_hawkes/em.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "cascade_hawkes/model.hpp"

namespace cascade_hawkes {

namespace {

// exp(-800) is exactly zero in double precision, so lags beyond this many
// kernel time constants contribute nothing to an E-step row.
constexpr double kMaxDecayExponent = 800.0;

struct RowBuffer {
  std::vector<double> immigrant;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> ancestor;
  std::vector<double> weight;
};

// Earliest event time per stance, for the structural test on retweets.
using FirstTimes = std::array<double, kNumStances>;

FirstTimes first_times(const Cascade& cascade) {
  FirstTimes first;
  first.fill(std::numeric_limits<double>::infinity());
  for (const Event& e : cascade.events()) {
    double& f = first[index_of(e.stance)];
    f = std::min(f, e.time);
  }
  return first;
}

void compute_row(const ModelParams& params, const Cascade& cascade, std::size_t j,
                 const EStepOptions& options, const FirstTimes& first, RowBuffer& out) {
  const Event& ej = cascade[j];
  const Stance k = ej.stance;
  const double w = params.omega_of(k);
  const std::size_t first_entry = out.ancestor.size();
  // A retweet copies its parent's stance, so only same-stance events can be
  // its parent and no stance-transition factor applies.
  const bool inherited = options.retweet_attribution == RetweetAttribution::InheritedStance &&
                         ej.type == TweetType::Retweet;

  auto admissible = [&](const Event& el) {
    return el.time < ej.time && (!inherited || el.stance == k);
  };
  auto consider = [&](std::size_t l) {
    const Event& el = cascade[l];
    if (!admissible(el)) return;
    const double mass =
        inherited ? params.delta_of(el.type) * el.reach
                  : excitation_mass(params, el, k, RetweetAttribution::StanceTransition);
    const double term = mass * w * std::exp(-w * (ej.time - el.time));
    if (term > 0.0) {
      out.ancestor.push_back(l);
      out.weight.push_back(term);
    }
  };

  bool structural_ancestors = false;
  const bool use_set = options.history == HistoryMode::NetworkRestricted &&
                       !cascade.ancestors(j).all_prior;
  const bool may_have_ancestors =
      options.immigrant_rule == ImmigrantRule::AnyEvent || ej.type != TweetType::Original;
  if (may_have_ancestors) {
    if (use_set) {
      const auto& members = cascade.ancestors(j).members;
      for (auto it = members.rbegin(); it != members.rend(); ++it) {
        if (admissible(cascade[*it])) structural_ancestors = true;
        consider(*it);
      }
    } else {
      structural_ancestors = inherited ? first[index_of(k)] < ej.time
                                       : j > 0 && cascade[0].time < ej.time;
      for (std::size_t l = j; l-- > 0;) {
        if (w * (ej.time - cascade[l].time) > kMaxDecayExponent) break;
        consider(l);
      }
    }
  }

  bool immigrant_eligible = true;
  if (options.immigrant_rule == ImmigrantRule::OriginalsOnly && ej.type != TweetType::Original) {
    immigrant_eligible = !structural_ancestors;
  }
  double imm = 0.0;
  if (immigrant_eligible) {
    imm = params.mu_of(k) * params.horizon * arrival_profile(params).pdf(ej.time);
  }

  double denom = imm;
  for (std::size_t i = first_entry; i < out.weight.size(); ++i) denom += out.weight[i];
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw DegenerateParamsError("no positive attribution term for event " + ej.id);
  }
  out.immigrant.push_back(imm / denom);
  for (std::size_t i = first_entry; i < out.weight.size(); ++i) out.weight[i] /= denom;
  out.counts.push_back(out.weight.size() - first_entry);
}

}  // namespace

double Responsibilities::entropy() const {
  double h = 0.0;
  for (double p : immigrant) {
    if (p > 0.0) h -= p * std::log(p);
  }
  for (double p : weight) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double Responsibilities::max_normalization_error() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < size(); ++j) {
    double s = immigrant[j];
    for (double p : weights_of(j)) s += p;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

Responsibilities e_step(const ModelParams& params, const Cascade& cascade,
                        const EStepOptions& options) {
  params.validate();
  if (options.history == HistoryMode::NetworkRestricted && !cascade.has_ancestor_sets()) {
    throw std::invalid_argument(
        "network-restricted history needs a cascade with resolved ancestor sets");
  }
  const std::size_t n = cascade.size();
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads,
                                                           static_cast<unsigned>(n / 256 + 1)));
  const FirstTimes first = first_times(cascade);
  std::vector<RowBuffer> buffers(threads);
  auto work = [&](unsigned t, std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      compute_row(params, cascade, j, options, first, buffers[t]);
    }
  };
  const std::size_t chunk = (n + threads - 1) / threads;
  if (threads == 1) {
    work(0, 0, n);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, std::min(n, t * chunk), std::min(n, (t + 1) * chunk));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Responsibilities out;
  out.immigrant.reserve(n);
  out.offsets.reserve(n + 1);
  for (RowBuffer& b : buffers) {
    out.immigrant.insert(out.immigrant.end(), b.immigrant.begin(), b.immigrant.end());
    for (std::size_t c : b.counts) out.offsets.push_back(out.offsets.back() + c);
    out.ancestor.insert(out.ancestor.end(), b.ancestor.begin(), b.ancestor.end());
    out.weight.insert(out.weight.end(), b.weight.begin(), b.weight.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Arrival scale

double solve_x_from_mean(double weighted_mean, double horizon, double tol) {
  if (!(weighted_mean > 0.0) || !(weighted_mean < 0.5 * horizon)) {
    std::ostringstream os;
    os << "weighted mean immigrant time " << weighted_mean << " is not inside (0, T/2) with T = "
       << horizon << "; the arrival-scale score has no root";
    throw NonBracketableError(os.str());
  }
  // The truncated mean x - T/(e^{T/x} - 1) increases from 0 to T/2 in x.
  auto score = [&](double x) { return x - horizon / std::expm1(horizon / x) - weighted_mean; };
  double lo = 0.5 * weighted_mean;
  double hi = 2.0 * weighted_mean;
  while (score(hi) <= 0.0) {
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NonBracketableError("arrival-scale score never turns positive");
  }
  while (score(lo) >= 0.0) lo *= 0.5;
  const int bits = std::clamp(static_cast<int>(std::ceil(-std::log2(tol))) + 1, 8,
                              std::numeric_limits<double>::digits - 1);
  boost::uintmax_t max_iter = 200;
  auto [a, b] = boost::math::tools::toms748_solve(score, lo, hi,
                                                  boost::math::tools::eps_tolerance<double>(bits),
                                                  max_iter);
  return 0.5 * (a + b);
}

double solve_x(const Responsibilities& resp, const Cascade& cascade, double horizon, double tol) {
  double mass = 0.0;
  double moment = 0.0;
  for (std::size_t j = 0; j < resp.size(); ++j) {
    mass += resp.immigrant[j];
    moment += resp.immigrant[j] * cascade[j].time;
  }
  if (!(mass > 0.0)) throw NonBracketableError("no immigrant mass to estimate x from");
  return solve_x_from_mean(moment / mass, horizon, tol);
}

// ---------------------------------------------------------------------------
// M-step

namespace {

// Solves A/w - B - sum_l m_l (T - t_l) e^{-w (T - t_l)} = 0 for w.
double exact_omega(double attributed, double lag_moment, const std::vector<double>& mass,
                   const std::vector<double>& remaining) {
  auto f = [&](double w) {
    double c = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) c += mass[i] * remaining[i] * std::exp(-w * remaining[i]);
    return attributed / w - lag_moment - c;
  };
  double hi = attributed / lag_moment;
  if (f(hi) >= 0.0) return hi;  // the truncation term vanishes
  double lo = 0.5 * hi;
  while (f(lo) <= 0.0) {
    lo *= 0.5;
    if (lo < 1e-300) throw NonBracketableError("exact omega equation has no bracket");
  }
  boost::uintmax_t max_iter = 200;
  auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(50), max_iter);
  return 0.5 * (a + b);
}

}  // namespace

MStepResult m_step(const Responsibilities& resp, const Cascade& cascade, const ModelParams& prev,
                   CompensatorForm form, double x_tol, RetweetAttribution attribution) {
  if (resp.size() != cascade.size()) {
    throw std::invalid_argument("responsibilities do not match the cascade");
  }
  MStepResult out{prev, {}};
  ModelParams& p = out.params;
  const double T = prev.horizon;

  std::array<double, kNumStances> immigrant_mass{};
  std::array<std::array<double, kNumStances>, kNumStances> stance_flow{};  // [from][to]
  std::array<double, kNumStances> attributed{};
  std::array<double, kNumStances> lag_moment{};
  std::array<double, kNumTweetTypes> type_mass{};
  std::array<double, 3> descendant_count{};
  double imm_total = 0.0;
  double imm_moment = 0.0;

  for (std::size_t j = 0; j < cascade.size(); ++j) {
    const Event& ej = cascade[j];
    const std::size_t k = index_of(ej.stance);
    immigrant_mass[k] += resp.immigrant[j];
    imm_total += resp.immigrant[j];
    imm_moment += resp.immigrant[j] * ej.time;
    if (ej.type != TweetType::Original) descendant_count[index_of(ej.type) - 1] += 1.0;
    auto anc = resp.ancestors_of(j);
    auto wts = resp.weights_of(j);
    for (std::size_t i = 0; i < anc.size(); ++i) {
      const Event& el = cascade[anc[i]];
      attributed[k] += wts[i];
      lag_moment[k] += wts[i] * (ej.time - el.time);
      type_mass[index_of(el.type)] += wts[i];
      if (carries_own_stance(ej.type)) stance_flow[index_of(el.stance)][k] += wts[i];
    }
  }

  for (std::size_t k = 0; k < kNumStances; ++k) p.mu[k] = immigrant_mass[k] / T;
  const double descendants = descendant_count[0] + descendant_count[1] + descendant_count[2];
  if (descendants > 0.0) {
    for (std::size_t i = 0; i < 3; ++i) p.p_type[i] = descendant_count[i] / descendants;
  }


  if (imm_total > 0.0) {
    try {
      p.x_scale = solve_x_from_mean(imm_moment / imm_total, T, x_tol);
    } catch (const NonBracketableError&) {
      out.retained.emplace_back("x");
    }
  } else {
    out.retained.emplace_back("x");
  }

  for (Stance from : kStances) {
    const std::size_t a = index_of(from);
    const double row = stance_flow[a][0] + stance_flow[a][1];
    if (row > 0.0) {
      p.gamma[a][0] = stance_flow[a][0] / row;
      p.gamma[a][1] = stance_flow[a][1] / row;
    } else {
      out.retained.push_back("gamma_" + std::string(from == Stance::Supporting ? "s" : "n") + "*");
    }
  }

  const char* omega_names[] = {"omega_s", "omega_n"};
  for (std::size_t k = 0; k < kNumStances; ++k) {
    if (!(attributed[k] > 0.0 && lag_moment[k] > 0.0)) {
      out.retained.emplace_back(omega_names[k]);
      continue;
    }
    if (form == CompensatorForm::Untruncated) {
      p.omega[k] = attributed[k] / lag_moment[k];
    } else {
      std::vector<double> mass;
      std::vector<double> remaining;
      mass.reserve(cascade.size());
      remaining.reserve(cascade.size());
      for (const Event& e : cascade.events()) {
        mass.push_back(prev.delta_of(e.type) *
                       child_stance_probability(p, e.stance, kStances[k], attribution) * e.reach);
        remaining.push_back(T - e.time);
      }
      try {
        p.omega[k] = exact_omega(attributed[k], lag_moment[k], mass, remaining);
      } catch (const NonBracketableError&) {
        out.retained.emplace_back(omega_names[k]);
      }
    }
  }

  const char* delta_names[] = {"delta_ori", "delta_ret", "delta_quo", "delta_rply"};
  std::array<double, kNumTweetTypes> exposure{};
  for (const Event& e : cascade.events()) {
    double share = 0.0;
    for (Stance k : kStances) {
      if (form == CompensatorForm::Untruncated) {
        share += child_stance_probability(prev, e.stance, k, attribution);
      } else {
        share += child_stance_probability(p, e.stance, k, attribution) *
                 -std::expm1(-p.omega_of(k) * (T - e.time));
      }
    }
    exposure[index_of(e.type)] += share * e.reach;
  }
  for (std::size_t r = 0; r < kNumTweetTypes; ++r) {
    if (exposure[r] > 0.0) {
      p.delta[r] = type_mass[r] / exposure[r];
    } else {
      out.retained.emplace_back(delta_names[r]);
    }
  }

  return out;
}

// ---------------------------------------------------------------------------
// Q function

double q_value(const ModelParams& params, const Responsibilities& resp, const Cascade& cascade,
               CompensatorForm form, RetweetAttribution attribution) {
  if (resp.size() != cascade.size()) {
    throw std::invalid_argument("responsibilities do not match the cascade");
  }
  const TruncatedExponential profile = arrival_profile(params);
  const double T = params.horizon;
  double q = 0.0;
  for (std::size_t j = 0; j < cascade.size(); ++j) {
    const Event& ej = cascade[j];
    const double pjj = resp.immigrant[j];
    if (pjj > 0.0) q += pjj * (std::log(params.mu_of(ej.stance) * T) + profile.log_pdf(ej.time));
    const double w = params.omega_of(ej.stance);
    auto anc = resp.ancestors_of(j);
    auto wts = resp.weights_of(j);
    for (std::size_t i = 0; i < anc.size(); ++i) {
      if (!(wts[i] > 0.0)) continue;
      const Event& el = cascade[anc[i]];
      double term = std::log(params.delta_of(el.type) * el.reach * w) - w * (ej.time - el.time);
      if (carries_own_stance(ej.type)) term += std::log(params.gamma_of(el.stance, ej.stance));
      q += wts[i] * term;
    }
  }
  q -= (params.mu[0] + params.mu[1]) * T;
  for (const Event& e : cascade.events()) {
    double share = 0.0;
    for (Stance k : kStances) {
      const double g = child_stance_probability(params, e.stance, k, attribution);
      share += form == CompensatorForm::Untruncated
                   ? g
                   : g * -std::expm1(-params.omega_of(k) * (T - e.time));
    }
    q -= params.delta_of(e.type) * e.reach * share;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Initialization and the EM loop

ModelParams param_init(const Cascade& cascade, InitPolicy) {
  if (cascade.empty()) throw std::invalid_argument("cannot initialize from an empty cascade");
  ModelParams p;
  const double T = cascade.horizon();
  p.horizon = T;

  std::array<double, kNumStances> originals{};
  double original_time = 0.0;
  double reach_sum = 0.0;
  std::array<double, 3> desc{};
  for (const Event& e : cascade.events()) {
    reach_sum += e.reach;
    if (e.type == TweetType::Original) {
      originals[index_of(e.stance)] += 1.0;
      original_time += e.time;
    } else {
      desc[index_of(e.type) - 1] += 1.0;
    }
  }
  const double n = static_cast<double>(cascade.size());
  const double n_orig = originals[0] + originals[1];
  // A stance with no originals starts at half an event over the window.
  for (std::size_t k = 0; k < kNumStances; ++k) p.mu[k] = std::max(originals[k], 0.5) / T;

  double x = n_orig > 0.0 ? original_time / n_orig : 0.0;
  if (!(x > 0.0)) x = 0.1 * T;
  p.x_scale = x;

  const double mean_reach = reach_sum / n;
  const double d = mean_reach > 0.0 ? 1.0 / (mean_reach * n) : 1.0 / n;
  p.delta.fill(d);
  p.gamma = {{{0.5, 0.5}, {0.5, 0.5}}};

  const double n_desc = desc[0] + desc[1] + desc[2];
  double omega = 1.0;
  if (n_desc > 0.0) {
    std::vector<double> gaps;
    for (std::size_t j = 1; j < cascade.size(); ++j) {
      const double g = cascade[j].time - cascade[j - 1].time;
      if (g > 0.0) gaps.push_back(g);
    }
    if (!gaps.empty()) {
      auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
      std::nth_element(gaps.begin(), mid, gaps.end());
      if (*mid > 0.0) omega = 1.0 / *mid;
    }
    for (std::size_t i = 0; i < 3; ++i) p.p_type[i] = desc[i] / n_desc;
  }
  p.omega = {omega, omega};
  return p;
}

FitReport fit(const Cascade& cascade, const EMConfig& config) {
  if (cascade.empty()) throw std::invalid_argument("cannot fit an empty cascade");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (config.max_iters == 0) throw std::invalid_argument("max_iters must be at least 1");

  FitReport report;
  ModelParams params = config.initial ? *config.initial : param_init(cascade, config.init);
  params.horizon = cascade.horizon();
  params.validate();

  auto safe_loglik = [&](const ModelParams& p) {
    try {
      return log_likelihood(p, cascade, config.retweet_attribution);
    } catch (const std::domain_error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  report.initial_loglik = safe_loglik(params);

  const EStepOptions estep{config.history, config.immigrant_rule, config.retweet_attribution,
                           config.threads};
  for (std::size_t s = 0; s < config.max_iters; ++s) {
    Responsibilities resp;
    try {
      resp = e_step(params, cascade, estep);
    } catch (const DegenerateParamsError& e) {
      report.diagnostic = "iteration " + std::to_string(s) + ": " + e.what();
      break;
    }
    report.max_normalization_error =
        std::max(report.max_normalization_error, resp.max_normalization_error());
    const RetweetAttribution a = config.retweet_attribution;
    const double q_old = q_value(params, resp, cascade, config.compensator, a);
    MStepResult m = m_step(resp, cascade, params, config.compensator, config.x_solver_tol, a);
    const double q_new = q_value(m.params, resp, cascade, config.compensator, a);
    if (!std::isfinite(q_new)) {
      report.diagnostic = "non-finite Q at iteration " + std::to_string(s);
      break;
    }
    report.m_step_gain.push_back(q_new - q_old);
    report.q_trace.push_back(q_new + resp.entropy());
    report.retained = std::move(m.retained);
    params = m.params;
    report.iterations = s + 1;
    const std::size_t len = report.q_trace.size();
    if (len >= 2 && std::abs(report.q_trace[len - 1] - report.q_trace[len - 2]) <= config.epsilon) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged && report.diagnostic.empty()) {
    report.diagnostic = "Q did not settle within " + std::to_string(config.max_iters) + " iterations";
  }
  report.params = params;
  report.loglik = safe_loglik(params);
  return report;
}

}  // namespace cascade_hawkes
