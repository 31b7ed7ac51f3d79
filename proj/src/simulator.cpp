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

#include "cascade_hawkes/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cascade_hawkes/model.hpp"

namespace cascade_hawkes {

namespace {

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  return static_cast<std::size_t>(std::poisson_distribution<long long>(mean)(rng));
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Inverse CDF of the truncated exponential.
double sample_arrival(Rng& rng, double scale, double upper) {
  const double u = uniform01(rng);
  const double t = -scale * std::log1p(u * std::expm1(-upper / scale));
  return std::clamp(t, 0.0, upper);
}

// Chooses k distinct values from [0, n) (Floyd's algorithm).  `mark` is a
// scratch buffer of size n, all zero on entry and on exit.
void sample_distinct(Rng& rng, std::size_t n, std::size_t k, std::vector<char>& mark,
                     std::vector<UserIndex>& out) {
  out.clear();
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    const std::size_t pick = mark[t] ? j : t;
    mark[pick] = 1;
    out.push_back(static_cast<UserIndex>(pick));
  }
  for (UserIndex v : out) mark[v] = 0;
}

}  // namespace

FollowerGraph generate_network(std::size_t user_count, double mean_followers,
                               std::uint64_t seed, double exponent) {
  if (user_count == 0) throw std::invalid_argument("user_count must be at least 1");
  if (!(mean_followers >= 0.0) || !std::isfinite(mean_followers)) {
    throw std::invalid_argument("mean_followers must be nonnegative");
  }
  if (!(exponent > 1.0)) throw std::invalid_argument("power-law exponent must exceed 1");

  std::vector<std::string> names(user_count);
  for (std::size_t u = 0; u < user_count; ++u) names[u] = "u" + std::to_string(u);
  if (user_count == 1) return FollowerGraph(std::move(names), {});
  if (mean_followers > static_cast<double>(user_count - 1)) {
    throw std::invalid_argument("mean_followers cannot exceed user_count - 1");
  }

  Rng rng(seed);
  const double cap = static_cast<double>(user_count - 1);
  std::vector<double> weight(user_count);
  for (double& w : weight) w = std::pow(1.0 - uniform01(rng), -1.0 / (exponent - 1.0));

  // Scale s so that sum_u min(cap, s * w_u) hits the requested edge count.
  const double target = mean_followers * static_cast<double>(user_count);
  auto realized = [&](double s) {
    double sum = 0.0;
    for (double w : weight) sum += std::min(cap, s * w);
    return sum;
  };
  double lo = 0.0;
  double hi = target / std::accumulate(weight.begin(), weight.end(), 0.0);
  while (realized(hi) < target && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (realized(mid) < target ? lo : hi) = mid;
  }

  std::vector<std::pair<UserIndex, UserIndex>> edges;
  edges.reserve(static_cast<std::size_t>(target * 1.01) + 16);
  std::vector<char> mark(user_count - 1, 0);
  std::vector<UserIndex> picked;
  for (std::size_t u = 0; u < user_count; ++u) {
    const double c = std::min(cap, hi * weight[u]);
    std::size_t k = static_cast<std::size_t>(std::floor(c));
    if (uniform01(rng) < c - std::floor(c)) ++k;
    k = std::min<std::size_t>(k, user_count - 1);
    sample_distinct(rng, user_count - 1, k, mark, picked);
    for (UserIndex v : picked) {
      const UserIndex follower = v >= u ? v + 1 : v;  // skip u itself
      edges.emplace_back(follower, static_cast<UserIndex>(u));
    }
  }
  return FollowerGraph(std::move(names), std::move(edges));
}

std::vector<Event> sample_immigrants(const SimConfig& config, Rng& rng) {
  const ModelParams& p = config.params;
  const FollowerGraph& graph = *config.graph;
  if (graph.known_users() == 0) throw std::invalid_argument("graph has no users");

  std::discrete_distribution<std::size_t> by_followers;
  if (config.user_assignment == UserAssignment::FollowerProportional) {
    std::vector<double> w(graph.known_users());
    for (std::size_t u = 0; u < w.size(); ++u) {
      w[u] = static_cast<double>(graph.follower_count(static_cast<UserIndex>(u)));
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) > 0.0) {
      by_followers = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    } else {
      std::fill(w.begin(), w.end(), 1.0);
      by_followers = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    }
  }

  std::vector<Event> out;
  for (Stance k : kStances) {
    const std::size_t n = poisson(rng, p.mu_of(k) * p.horizon);
    for (std::size_t i = 0; i < n; ++i) {
      Event e;
      e.time = sample_arrival(rng, p.x_scale, p.horizon);
      const std::size_t u = config.user_assignment == UserAssignment::Uniform
                                ? uniform_index(rng, graph.known_users())
                                : by_followers(rng);
      e.user = graph.name(static_cast<UserIndex>(u));
      e.type = TweetType::Original;
      e.stance = k;
      e.reach = event_reach(graph, e, std::nullopt, p.beta_follow, p.beta_reply_view);
      out.push_back(std::move(e));
    }
  }
  return out;
}

namespace {

std::vector<Event> draw_children(const Event& parent, const Event* grandparent,
                                 const SimConfig& config, Rng& rng, std::size_t& past_horizon) {
  const ModelParams& p = config.params;
  const FollowerGraph& graph = *config.graph;
  std::vector<Event> children;
  const std::size_t count = poisson(rng, p.delta_of(parent.type) * parent.reach);
  if (count == 0) return children;

  // Eligible observers: followers of the author, plus (for replies) the
  // remaining followers of the replied-to author.
  const UserIndex author = graph.require(parent.user);
  auto direct = graph.followers(author);
  std::vector<UserIndex> viewers;
  if (parent.type == TweetType::Reply && grandparent) {
    if (auto gp = graph.find(grandparent->user)) {
      for (UserIndex v : graph.followers(*gp)) {
        if (!std::binary_search(direct.begin(), direct.end(), v)) viewers.push_back(v);
      }
    }
  }
  const double w_direct = p.beta_follow * static_cast<double>(direct.size());
  const double w_view = p.beta_reply_view * static_cast<double>(viewers.size());
  if (!(w_direct + w_view > 0.0)) return children;

  std::discrete_distribution<std::size_t> type_dist(p.p_type.begin(), p.p_type.end());
  const auto& row = p.gamma[index_of(parent.stance)];
  std::discrete_distribution<std::size_t> stance_dist(row.begin(), row.end());

  for (std::size_t c = 0; c < count; ++c) {
    Event child;
    child.stance = kStances[stance_dist(rng)];
    child.type = kTweetTypes[type_dist(rng) + 1];
    if (child.type == TweetType::Retweet) child.stance = parent.stance;
    const double offset =
        std::exponential_distribution<double>(p.omega_of(child.stance))(rng);
    const bool pick_direct = uniform01(rng) * (w_direct + w_view) < w_direct;
    const UserIndex u = pick_direct ? direct[uniform_index(rng, direct.size())]
                                    : viewers[uniform_index(rng, viewers.size())];
    child.time = parent.time + offset;
    if (child.time > p.horizon) {
      ++past_horizon;
      continue;
    }
    child.user = graph.name(u);
    child.parent_id = parent.id;
    child.reach = event_reach(graph, child,
                              child.type == TweetType::Reply
                                  ? std::optional<std::string_view>(parent.user)
                                  : std::nullopt,
                              p.beta_follow, p.beta_reply_view);
    children.push_back(std::move(child));
  }
  return children;
}

void check_config(const SimConfig& config) {
  if (!config.graph) throw std::invalid_argument("simulation requires a follower graph");
  if (config.max_events == 0) throw std::invalid_argument("max_events must be positive");
  config.params.validate();
}

}  // namespace

std::vector<Event> sample_offspring(const Event& parent, const Event* grandparent,
                                    const SimConfig& config, Rng& rng) {
  check_config(config);
  std::size_t ignored = 0;
  return draw_children(parent, grandparent, config, rng, ignored);
}

SimReport simulate_cascade(const SimConfig& config) {
  check_config(config);
  const BranchingSummary branching = branching_ratio(config.params, *config.graph);
  if (!branching.subcritical() && !config.force) {
    std::ostringstream os;
    os << "descendant branching ratio " << branching.descendant_ratio
       << " >= 1; cascade would not die out";
    throw std::domain_error(os.str());
  }

  Rng rng(config.seed);
  SimReport report;
  std::vector<Event> all = sample_immigrants(config, rng);
  std::vector<std::ptrdiff_t> parent_of(all.size(), -1);
  if (all.size() > config.max_events) {
    all.resize(config.max_events);
    parent_of.resize(config.max_events);
    report.truncated = true;
  }
  for (std::size_t i = 0; i < all.size(); ++i) all[i].id = std::to_string(i);

  for (std::size_t next = 0; next < all.size() && !report.truncated; ++next) {
    const Event* grandparent = parent_of[next] >= 0 ? &all[parent_of[next]] : nullptr;
    std::vector<Event> kids = draw_children(all[next], grandparent, config, rng,
                                            report.past_horizon);
    for (Event& kid : kids) {
      if (all.size() >= config.max_events) {
        report.truncated = true;
        break;
      }
      kid.id = std::to_string(all.size());
      parent_of.push_back(static_cast<std::ptrdiff_t>(next));
      all.push_back(std::move(kid));
    }
  }

  // Rename to time order.
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return all[a].time < all[b].time; });
  std::vector<std::string> new_id(all.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) new_id[order[pos]] = "e" + std::to_string(pos);
  std::vector<Event> sorted;
  sorted.reserve(all.size());
  for (std::size_t i : order) {
    Event e = std::move(all[i]);
    e.id = new_id[i];
    if (parent_of[i] >= 0) e.parent_id = new_id[static_cast<std::size_t>(parent_of[i])];
    sorted.push_back(std::move(e));
  }
  report.cascade = Cascade(std::move(sorted), config.params.horizon);
  report.counts = count_events(report.cascade);
  return report;
}

BranchingSummary branching_ratio(const ModelParams& params, const FollowerGraph& graph) {
  BranchingSummary out;
  if (graph.user_count() == 0) return out;
  double followers = 0.0;
  for (std::size_t u = 0; u < graph.known_users(); ++u) {
    followers += static_cast<double>(graph.follower_count(static_cast<UserIndex>(u)));
  }
  const double mean_followers = followers / static_cast<double>(graph.user_count());
  out.mean_reach = params.beta_follow * mean_followers;
  out.immigrant_offspring = params.delta_of(TweetType::Original) * out.mean_reach;
  for (TweetType r : {TweetType::Retweet, TweetType::Quote, TweetType::Reply}) {
    double reach = out.mean_reach;
    if (r == TweetType::Reply) reach += params.beta_reply_view * mean_followers;
    out.descendant_ratio += params.p_of(r) * params.delta_of(r) * reach;
  }
  return out;
}

}  // namespace cascade_hawkes
