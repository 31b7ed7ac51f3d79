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

#include <doctest.h>

#include <cmath>
#include <random>

#include "cascade_hawkes/em.hpp"
#include "cascade_hawkes/io.hpp"
#include "cascade_hawkes/model.hpp"
#include "cascade_hawkes/simulator.hpp"
#include "test_support.hpp"

namespace ch = cascade_hawkes;
using ch::Stance;
using ch::TweetType;
using ch::testing::make_event;

namespace {

ch::Cascade simulate(const ch::ModelParams& p, std::size_t users, double mean_followers,
                     std::uint64_t seed) {
  ch::SimConfig cfg;
  cfg.params = p;
  cfg.graph = std::make_shared<const ch::FollowerGraph>(
      ch::generate_network(users, mean_followers, seed));
  cfg.seed = seed;
  return ch::simulate_cascade(cfg).cascade;
}

// A moderately excited parameter set on a short window.
ch::ModelParams small_params(double horizon = 200.0) {
  ch::ModelParams p;
  p.mu = {0.3, 0.1};
  p.x_scale = 60.0;
  p.delta = {0.02, 0.008, 0.01, 0.006};
  p.gamma = {{{0.85, 0.15}, {0.4, 0.6}}};
  p.omega = {1.2, 0.6};
  p.p_type = {0.6, 0.2, 0.2};
  p.horizon = horizon;
  return p;
}

// Independent evaluation of the objective EM ascends under the default
// options: originals come from the background, retweets from same-stance
// events without a stance factor, quotes and replies through gamma.
double marked_objective(const ch::ModelParams& p, const ch::Cascade& c) {
  const ch::TruncatedExponential f{p.x_scale, p.horizon};
  double ll = 0.0;
  for (const ch::Event& ej : c.events()) {
    const std::size_t k = ch::index_of(ej.stance);
    const double imm = p.mu[k] * p.horizon * f.pdf(ej.time);
    if (ej.type == TweetType::Original) {
      ll += std::log(imm);
      continue;
    }
    double sum = 0.0;
    bool any = false;
    for (const ch::Event& el : c.events()) {
      if (!(el.time < ej.time)) continue;
      if (ej.type == TweetType::Retweet && el.stance != ej.stance) continue;
      any = true;
      const double g = ej.type == TweetType::Retweet ? 1.0
                                                     : p.gamma[ch::index_of(el.stance)][k];
      sum += p.delta[ch::index_of(el.type)] * g * el.reach * p.omega[k] *
             std::exp(-p.omega[k] * (ej.time - el.time));
    }
    ll += std::log(any ? sum : imm);
  }
  ll -= (p.mu[0] + p.mu[1]) * p.horizon;
  for (const ch::Event& e : c.events()) ll -= p.delta[ch::index_of(e.type)] * e.reach;
  return ll;
}

}  // namespace

TEST_SUITE("em") {

TEST_CASE("first event is an immigrant") {
  const ch::Cascade c = ch::testing::toy_cascade();
  for (ch::ImmigrantRule rule : {ch::ImmigrantRule::AnyEvent, ch::ImmigrantRule::OriginalsOnly}) {
    const ch::Responsibilities r = ch::e_step(ch::testing::toy_params(), c, {.immigrant_rule = rule});
    CHECK(r.immigrant[0] == 1.0);
    CHECK(r.ancestors_of(0).empty());
  }
}

TEST_CASE("two-event responsibilities match the direct formula") {
  ch::ModelParams p = ch::testing::toy_params();
  const ch::Cascade c({make_event("a", 1.0, "u", TweetType::Original, Stance::Supporting,
                                  std::nullopt, 30.0),
                       make_event("b", 1.2, "v", TweetType::Quote, Stance::NotSupporting, "a",
                                  4.0)},
                      10.0);
  const double imm = 0.2 * 10.0 * std::exp(-1.2 / 4.0) / (4.0 * (1.0 - std::exp(-10.0 / 4.0)));
  const double exc = 0.02 * 0.2 * 30.0 * 0.7 * std::exp(-0.7 * 0.2);

  const ch::Responsibilities any = ch::e_step(p, c, {.immigrant_rule = ch::ImmigrantRule::AnyEvent});
  CHECK(any.immigrant[1] == doctest::Approx(imm / (imm + exc)).epsilon(1e-12));
  REQUIRE(any.weights_of(1).size() == 1);
  CHECK(any.weights_of(1)[0] == doctest::Approx(exc / (imm + exc)).epsilon(1e-12));
  CHECK(any.ancestors_of(1)[0] == 0);

  // Descendants with an admissible ancestor are offspring.
  const ch::Responsibilities orig = ch::e_step(p, c);
  CHECK(orig.immigrant[1] == 0.0);
  CHECK(orig.weights_of(1)[0] == 1.0);
}

TEST_CASE("ancestor weights are proportional to excitation terms") {
  const ch::ModelParams p = ch::testing::toy_params();
  const ch::Cascade c = ch::testing::toy_cascade();
  for (ch::RetweetAttribution ra :
       {ch::RetweetAttribution::InheritedStance, ch::RetweetAttribution::StanceTransition}) {
    const ch::Responsibilities r = ch::e_step(p, c, {.retweet_attribution = ra});
    for (std::size_t j = 0; j < c.size(); ++j) {
      const ch::Event& ej = c[j];
      const std::size_t k = ch::index_of(ej.stance);
      // Originals come from the background only.
      std::vector<double> terms;
      for (std::size_t l = 0; l < j && ej.type != TweetType::Original; ++l) {
        const ch::Event& el = c[l];
        const bool inherit = ra == ch::RetweetAttribution::InheritedStance &&
                             ej.type == TweetType::Retweet;
        if (inherit && el.stance != ej.stance) {
          terms.push_back(0.0);
          continue;
        }
        const double g = inherit ? 1.0 : p.gamma[ch::index_of(el.stance)][k];
        terms.push_back(p.delta[ch::index_of(el.type)] * g * el.reach * p.omega[k] *
                        std::exp(-p.omega[k] * (ej.time - el.time)));
      }
      double offspring = 0.0;
      for (double t : terms) offspring += t;
      double imm = 0.0;
      if (ej.type == TweetType::Original || offspring == 0.0) {
        imm = p.mu[k] * p.horizon * ch::arrival_profile(p).pdf(ej.time);
      }
      double denom = imm;
      for (double t : terms) denom += t;
      CHECK(r.immigrant[j] == doctest::Approx(imm / denom).epsilon(1e-12));
      auto anc = r.ancestors_of(j);
      auto wts = r.weights_of(j);
      double listed = 0.0;
      for (std::size_t i = 0; i < anc.size(); ++i) {
        CHECK(wts[i] == doctest::Approx(terms[anc[i]] / denom).epsilon(1e-12));
        listed += terms[anc[i]];
      }
      CHECK(listed == doctest::Approx(denom - imm).epsilon(1e-12));
    }
  }
}

TEST_CASE("rows are normalized on a simulated cascade") {
  const ch::ModelParams p = small_params(400.0);
  const ch::Cascade raw = simulate(p, 400, 40.0, 12);
  REQUIRE(raw.size() >= 300);
  const ch::FollowerGraph g = ch::generate_network(400, 40.0, 12);
  const ch::Cascade net =
      ch::resolve_influence(raw, g, {.mode = ch::HistoryMode::NetworkRestricted}).cascade;
  for (ch::HistoryMode mode : {ch::HistoryMode::Full, ch::HistoryMode::NetworkRestricted}) {
    for (ch::ImmigrantRule rule : {ch::ImmigrantRule::AnyEvent, ch::ImmigrantRule::OriginalsOnly}) {
      for (unsigned threads : {1u, 4u}) {
        const ch::Responsibilities r =
            ch::e_step(p, net, {.history = mode, .immigrant_rule = rule, .threads = threads});
        CHECK(r.size() == net.size());
        CHECK(r.max_normalization_error() < 1e-10);
      }
    }
  }
  // Threading does not change the result.
  const ch::Responsibilities a = ch::e_step(p, net, {.threads = 1});
  const ch::Responsibilities b = ch::e_step(p, net, {.threads = 3});
  CHECK(a.immigrant == b.immigrant);
  CHECK(a.weight == b.weight);
  CHECK(a.offsets == b.offsets);
  CHECK_THROWS_AS(ch::e_step(p, raw, {.history = ch::HistoryMode::NetworkRestricted}),
                  std::invalid_argument);
}

TEST_CASE("degenerate parameters") {
  ch::ModelParams p = ch::testing::toy_params();
  p.mu = {0.0, 0.2};
  CHECK_THROWS_AS(ch::e_step(p, ch::testing::toy_cascade()), ch::DegenerateParamsError);

  ch::EMConfig cfg;
  cfg.initial = p;
  const ch::FitReport r = ch::fit(ch::testing::toy_cascade(), cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.diagnostic.find("no positive attribution") != std::string::npos);
}

TEST_CASE("M-step closed forms") {
  // 900 supporting originals over T = 6000.
  std::vector<ch::Event> ev;
  for (int i = 0; i < 900; ++i) {
    ev.push_back(make_event("o" + std::to_string(i), 1.0 + 5.0 * i, "u", TweetType::Original,
                            Stance::Supporting, std::nullopt, 10.0));
  }
  const ch::Cascade c(ev, 6000.0);
  const ch::ModelParams prev = ch::testing::truth_params();
  const ch::Responsibilities r = ch::e_step(prev, c);
  const ch::MStepResult m = ch::m_step(r, c, prev);
  CHECK(m.params.mu[0] == doctest::Approx(0.15).epsilon(1e-14));
  CHECK(m.params.mu[1] == 0.0);
  // No descendants: the families without mass keep their previous values.
  CHECK(m.params.gamma == prev.gamma);
  CHECK(m.params.omega == prev.omega);
  CHECK(m.params.delta[0] == 0.0);
  CHECK(m.params.delta[1] == prev.delta[1]);

  // Hand-built responsibilities: each child sits exactly 1/3 h after its parent.
  std::vector<ch::Event> pairs;
  for (int i = 0; i < 20; ++i) {
    const double t = 3.0 * i + 0.5;
    const Stance k = i % 3 == 0 ? Stance::NotSupporting : Stance::Supporting;
    pairs.push_back(make_event("p" + std::to_string(i), t, "u", TweetType::Original, k,
                               std::nullopt, 50.0));
    const TweetType r = i % 2 ? TweetType::Quote : TweetType::Reply;
    pairs.push_back(make_event("c" + std::to_string(i), t + 1.0 / 3.0, "v", r,
                               i % 4 ? k : Stance::NotSupporting, "p" + std::to_string(i), 2.0));
  }
  const ch::Cascade pc(pairs, 100.0);
  ch::Responsibilities hand;
  for (std::size_t j = 0; j < pc.size(); ++j) {
    if (pc[j].type == TweetType::Original) {
      hand.immigrant.push_back(1.0);
    } else {
      hand.immigrant.push_back(0.0);
      hand.ancestor.push_back(*pc[j].parent_index);
      hand.weight.push_back(1.0);
    }
    hand.offsets.push_back(hand.ancestor.size());
  }
  const ch::MStepResult pm = ch::m_step(hand, pc, ch::testing::toy_params(100.0));
  CHECK(pm.params.omega[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(pm.params.omega[1] == doctest::Approx(3.0).epsilon(1e-12));
  for (const auto& row : pm.params.gamma) CHECK(std::abs(row[0] + row[1] - 1.0) <= 1e-12);
  // delta_ori: 20 children over 20 originals of reach 50.
  CHECK(pm.params.delta[0] == doctest::Approx(20.0 / 1000.0).epsilon(1e-12));
  CHECK(pm.params.p_type[0] == 0.0);
  CHECK(pm.params.p_type[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("gamma ignores retweet children") {
  // Supporting original, not-supporting retweet attributed to it.
  const ch::Cascade c({make_event("a", 1.0, "u", TweetType::Original, Stance::Supporting,
                                  std::nullopt, 10.0),
                       make_event("b", 2.0, "v", TweetType::Retweet, Stance::NotSupporting, "a",
                                  5.0),
                       make_event("q", 3.0, "w", TweetType::Quote, Stance::Supporting, "a", 5.0)},
                      50.0);
  ch::Responsibilities hand;
  hand.immigrant = {1.0, 0.0, 0.0};
  hand.offsets = {0, 0, 1, 2};
  hand.ancestor = {0, 0};
  hand.weight = {1.0, 1.0};
  const ch::MStepResult m = ch::m_step(hand, c, ch::testing::toy_params(50.0));
  CHECK(m.params.gamma[0][0] == 1.0);
  CHECK(m.params.gamma[0][1] == 0.0);
}

TEST_CASE("arrival-scale solver") {
  // Mass far from T: the truncated MLE approaches the plain exponential mean.
  CHECK(ch::solve_x_from_mean(3.0, 6000.0) == doctest::Approx(3.0).epsilon(0.01));
  CHECK(ch::solve_x_from_mean(985.0905, 6000.0) == doctest::Approx(1000.0).epsilon(1e-5));

  // Single immigrant at T/4: compare with a dense grid search of log f.
  const double T = 100.0;
  const ch::Cascade one({make_event("a", T / 4, "u", TweetType::Original, Stance::Supporting)}, T);
  ch::Responsibilities r;
  r.immigrant = {1.0};
  r.offsets = {0, 0};
  const double x = ch::solve_x(r, one, T, 1e-12);
  double best = 0.0;
  double best_ll = -1e300;
  for (double g = 1.0; g <= 1000.0; g += 0.001) {
    const double ll = ch::TruncatedExponential{g, T}.log_pdf(T / 4);
    if (ll > best_ll) {
      best_ll = ll;
      best = g;
    }
  }
  CHECK(x == doctest::Approx(best).epsilon(1e-4));

  // At or beyond T/2 the likelihood increases without bound in x.
  const ch::Cascade mid({make_event("a", T / 2, "u", TweetType::Original, Stance::Supporting)}, T);
  CHECK_THROWS_AS(ch::solve_x(r, mid, T), ch::NonBracketableError);
  CHECK(ch::TruncatedExponential{1e4, T}.log_pdf(T / 2) >
        ch::TruncatedExponential{1e2, T}.log_pdf(T / 2));
  CHECK_THROWS_AS(ch::solve_x_from_mean(0.0, T), ch::NonBracketableError);
}

TEST_CASE("Q of a single immigrant") {
  ch::ModelParams p = ch::testing::truth_params();
  p.delta = {0, 0, 0, 0};
  const ch::Cascade c({make_event("a", 40.0, "u", TweetType::Original, Stance::Supporting)}, 6000.0);
  const ch::Responsibilities r = ch::e_step(p, c);
  const double expected = std::log(0.15 * 6000.0 * ch::arrival_profile(p).pdf(40.0)) -
                          (0.15 + 0.015) * 6000.0;
  CHECK(ch::q_value(p, r, c) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("Q plus entropy equals the marked log-likelihood at the E-step point") {
  const ch::ModelParams p = small_params();
  const ch::Cascade c = simulate(p, 300, 30.0, 2);
  REQUIRE(c.size() > 50);
  const ch::Responsibilities r = ch::e_step(p, c);
  CHECK(ch::q_value(p, r, c) + r.entropy() == doctest::Approx(marked_objective(p, c)).epsilon(1e-10));
}

TEST_CASE("EM on small simulated cascades") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 6; ++rep) {
    ch::ModelParams p = small_params();
    p.mu = {0.1 + 0.3 * u(rng), 0.05 + 0.2 * u(rng)};
    p.omega = {0.5 + 2 * u(rng), 0.3 + 2 * u(rng)};
    const ch::Cascade c = simulate(p, 300, 30.0, 100 + rep);
    ch::EMConfig cfg;
    cfg.epsilon = 1e-8;
    cfg.max_iters = 2000;
    const ch::FitReport r = ch::fit(c, cfg);
    CHECK(r.converged);
    CHECK(r.max_normalization_error < 1e-10);
    for (std::size_t s = 1; s < r.q_trace.size(); ++s) {
      CHECK(r.q_trace[s] - r.q_trace[s - 1] >= -1e-8);
    }
    for (double g : r.m_step_gain) CHECK(g >= -1e-8);
    const std::size_t n = r.q_trace.size();
    REQUIRE(n >= 2);
    CHECK(std::abs(r.q_trace[n - 1] - r.q_trace[n - 2]) <= cfg.epsilon);
    CHECK(r.loglik >= r.initial_loglik);
    for (const auto& row : r.params.gamma) CHECK(std::abs(row[0] + row[1] - 1.0) <= 1e-12);
    CHECK(std::abs(r.params.p_type[0] + r.params.p_type[1] + r.params.p_type[2] - 1.0) <= 1e-12);
    // The last trace entry is the bound at the previous parameters, which the
    // objective at the returned parameters can only exceed.
    CHECK(marked_objective(r.params, c) >= r.q_trace.back() - 1e-8);
  }
}

TEST_CASE("looser epsilon stops sooner") {
  const ch::Cascade c = simulate(small_params(), 300, 30.0, 31);
  ch::EMConfig loose;
  loose.epsilon = 1e-3;
  ch::EMConfig tight;
  tight.epsilon = 1e-8;
  tight.max_iters = 5000;
  const ch::FitReport a = ch::fit(c, loose);
  const ch::FitReport b = ch::fit(c, tight);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(a.iterations < b.iterations);
  CHECK(std::abs(a.q_trace.back() - b.q_trace[a.iterations - 1]) <= 1e-9);
}

TEST_CASE("immigrant-only data yields negligible branching") {
  ch::ModelParams p = ch::testing::truth_params();
  p.delta = {0, 0, 0, 0};
  const ch::Cascade c = simulate(p, 500, 50.0, 8);
  ch::EMConfig cfg;
  cfg.immigrant_rule = ch::ImmigrantRule::AnyEvent;
  const ch::FitReport r = ch::fit(c, cfg);
  double mean_n = 0.0;
  for (const ch::Event& e : c.events()) mean_n += e.reach;
  mean_n /= static_cast<double>(c.size());
  double mass = 0.0;
  for (double d : r.params.delta) mass += d * mean_n;
  CHECK(mass < 0.05);
  double supporting = 0.0;
  for (const ch::Event& e : c.events()) supporting += e.stance == Stance::Supporting;
  CHECK(r.params.mu[0] == doctest::Approx(supporting / 6000.0).epsilon(0.05));
}

TEST_CASE("initial parameters") {
  std::vector<ch::Event> ev;
  for (int i = 0; i < 895; ++i) {
    ev.push_back(make_event("o" + std::to_string(i), 1.0 + 6.0 * i, "u", TweetType::Original,
                            Stance::Supporting, std::nullopt, 10.0));
  }
  const ch::ModelParams p = ch::param_init(ch::Cascade(ev, 6000.0));
  CHECK(p.mu[0] == doctest::Approx(0.1492).epsilon(1e-3));
  CHECK(p.omega[0] == 1.0);
  CHECK(p.omega[1] == 1.0);
  for (const auto& row : p.gamma) CHECK(row[0] + row[1] == 1.0);
  CHECK_NOTHROW(p.validate());
  CHECK_THROWS_AS(ch::param_init(ch::Cascade({}, 1.0)), std::invalid_argument);
}

TEST_CASE("exact compensator form") {
  const ch::ModelParams p = small_params(200.0);
  const ch::Cascade c = simulate(p, 300, 30.0, 41);
  const ch::Responsibilities r = ch::e_step(p, c);
  const ch::MStepResult a = ch::m_step(r, c, p, ch::CompensatorForm::Untruncated);
  const ch::MStepResult b = ch::m_step(r, c, p, ch::CompensatorForm::Exact);
  // Exact updates raise the exact Q over the untruncated ones.
  CHECK(ch::q_value(b.params, r, c, ch::CompensatorForm::Exact) >=
        ch::q_value(p, r, c, ch::CompensatorForm::Exact) - 1e-8);
  // Events end well before T, so the two forms nearly agree.
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(b.params.omega[k] == doctest::Approx(a.params.omega[k]).epsilon(0.05));
  }
  ch::EMConfig cfg;
  cfg.compensator = ch::CompensatorForm::Exact;
  CHECK(ch::fit(c, cfg).converged);
}

}  // TEST_SUITE
