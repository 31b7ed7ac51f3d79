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

#include "cascade_hawkes/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cascade_hawkes {

std::string_view to_string(TweetType r) {
  switch (r) {
    case TweetType::Original: return "original";
    case TweetType::Retweet: return "retweet";
    case TweetType::Quote: return "quote";
    case TweetType::Reply: return "reply";
  }
  return "?";
}

std::string_view to_string(Stance k) {
  return k == Stance::Supporting ? "supporting" : "not_supporting";
}

std::optional<TweetType> parse_tweet_type(std::string_view s) {
  for (TweetType r : kTweetTypes) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

std::optional<Stance> parse_stance(std::string_view s) {
  for (Stance k : kStances) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cascade

Cascade::Cascade(std::vector<Event> events, double horizon)
    : events_(std::move(events)), horizon_(horizon) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw std::invalid_argument("cascade horizon must be positive and finite");
  }
  for (const Event& e : events_) {
    if (!std::isfinite(e.time) || e.time < 0.0 || e.time > horizon_) {
      std::ostringstream os;
      os << "event " << e.id << " has time " << e.time << " outside [0, " << horizon_ << "]";
      throw std::invalid_argument(os.str());
    }
    if (!std::isfinite(e.reach) || e.reach < 0.0) {
      throw std::invalid_argument("event " + e.id + " has invalid reach");
    }
  }
  std::sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
    return a.time < b.time || (a.time == b.time && a.id < b.id);
  });
  index_.reserve(events_.size());
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (!index_.emplace(events_[i].id, i).second) {
      throw std::invalid_argument("duplicate event id: " + events_[i].id);
    }
  }
  for (Event& e : events_) {
    e.parent_index.reset();
    if (!e.parent_id) continue;
    auto it = index_.find(*e.parent_id);
    if (it == index_.end()) continue;
    const Event& parent = events_[it->second];
    if (!(parent.time < e.time)) {
      throw std::invalid_argument("event " + e.id + " does not occur after its parent " +
                                  parent.id);
    }
    e.parent_index = it->second;
  }
}

std::optional<std::size_t> Cascade::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Cascade Cascade::with_reach(std::span<const double> reach) const {
  if (reach.size() != events_.size()) {
    throw std::invalid_argument("reach vector size does not match cascade");
  }
  Cascade out = *this;
  for (std::size_t i = 0; i < reach.size(); ++i) {
    if (!std::isfinite(reach[i]) || reach[i] < 0.0) {
      throw std::invalid_argument("reach must be finite and nonnegative");
    }
    out.events_[i].reach = reach[i];
  }
  return out;
}

Cascade Cascade::with_ancestor_sets(std::vector<AncestorSet> sets) const {
  if (sets.size() != events_.size()) {
    throw std::invalid_argument("ancestor set count does not match cascade");
  }
  for (std::size_t j = 0; j < sets.size(); ++j) {
    for (std::size_t l : sets[j].members) {
      if (l >= j) throw std::invalid_argument("ancestor set contains a non-prior event");
    }
  }
  Cascade out = *this;
  out.ancestors_ = std::move(sets);
  return out;
}

Cascade Cascade::with_stance(std::size_t j, Stance k) const {
  Cascade out = *this;
  out.events_.at(j).stance = k;
  return out;
}

Cascade Cascade::with_horizon(double horizon) const {
  std::vector<Event> copy = events_;
  Cascade out(std::move(copy), horizon);
  out.ancestors_ = ancestors_;
  return out;
}

// ---------------------------------------------------------------------------
// FollowerGraph

FollowerGraph::FollowerGraph(std::vector<std::string> user_names,
                             std::vector<std::pair<UserIndex, UserIndex>> edges,
                             std::optional<std::size_t> user_count)
    : names_(std::move(user_names)) {
  index_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<UserIndex>(i)).second) {
      throw std::invalid_argument("duplicate user name: " + names_[i]);
    }
  }
  user_count_ = user_count.value_or(names_.size());
  if (user_count_ < names_.size()) {
    throw std::invalid_argument("user count is smaller than the number of known users");
  }

  const std::size_t n = names_.size();
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [follower, followee] : edges) {
    if (follower >= n || followee >= n) throw std::out_of_range("edge references unknown user");
    if (follower == followee) continue;
    ++degree[followee];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) offsets_[u + 1] = offsets_[u] + degree[u];
  followers_.assign(offsets_[n], 0);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [follower, followee] : edges) {
    if (follower == followee) {
      ++self_loops_dropped_;
      continue;
    }
    followers_[cursor[followee]++] = follower;
  }
  // Sort and deduplicate each block, then compact.
  std::size_t write = 0;
  std::vector<std::size_t> new_offsets(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) {
    auto first = followers_.begin() + static_cast<std::ptrdiff_t>(offsets_[u]);
    auto last = followers_.begin() + static_cast<std::ptrdiff_t>(offsets_[u + 1]);
    std::sort(first, last);
    auto uend = std::unique(first, last);
    duplicates_dropped_ += static_cast<std::size_t>(last - uend);
    new_offsets[u] = write;
    for (auto it = first; it != uend; ++it) followers_[write++] = *it;
  }
  new_offsets[n] = write;
  followers_.resize(write);
  followers_.shrink_to_fit();
  offsets_ = std::move(new_offsets);
}

std::optional<UserIndex> FollowerGraph::find(std::string_view user) const {
  auto it = index_.find(std::string(user));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

UserIndex FollowerGraph::require(std::string_view user) const {
  auto u = find(user);
  if (!u) throw UnknownUserError(std::string(user));
  return *u;
}

std::span<const UserIndex> FollowerGraph::followers(UserIndex u) const {
  if (u >= names_.size()) throw std::out_of_range("user index out of range");
  return {followers_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
}

bool FollowerGraph::follows(UserIndex follower, UserIndex followee) const {
  auto f = followers(followee);
  return std::binary_search(f.begin(), f.end(), follower);
}

std::vector<std::pair<UserIndex, UserIndex>> FollowerGraph::edges() const {
  std::vector<std::pair<UserIndex, UserIndex>> out;
  out.reserve(followers_.size());
  for (std::size_t u = 0; u < names_.size(); ++u) {
    for (std::size_t i = offsets_[u]; i < offsets_[u + 1]; ++i) {
      out.emplace_back(followers_[i], static_cast<UserIndex>(u));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ModelParams

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void ModelParams::validate() const {
  require(finite_pos(horizon), "horizon T must be positive");
  require(finite_pos(x_scale), "x must be positive");
  for (double m : mu) require(finite_nonneg(m), "mu must be nonnegative");
  for (double d : delta) require(finite_nonneg(d), "delta must be nonnegative");
  for (double w : omega) require(finite_pos(w), "omega must be positive");
  for (const auto& row : gamma) {
    for (double g : row) require(finite_nonneg(g) && g <= 1.0, "gamma entries must lie in [0, 1]");
    require(std::abs(row[0] + row[1] - 1.0) <= 1e-12, "gamma rows must sum to 1");
  }
  for (double p : p_type) require(finite_nonneg(p), "p_type entries must be nonnegative");
  require(std::abs(p_type[0] + p_type[1] + p_type[2] - 1.0) <= 1e-12, "p_type must sum to 1");
  require(finite_nonneg(beta_follow) && finite_nonneg(beta_reply_view),
          "beta constants must be nonnegative");
}

CountsTable count_events(const Cascade& cascade) {
  CountsTable counts{};
  for (const Event& e : cascade.events()) ++counts[index_of(e.stance)][index_of(e.type)];
  return counts;
}

std::size_t total(const CountsTable& counts) {
  std::size_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

}  // namespace cascade_hawkes
