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

#ifndef CASCADE_HAWKES_TYPES_HPP_
#define CASCADE_HAWKES_TYPES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cascade_hawkes {

// Error raised when a user id cannot be found in a follower graph.
class UnknownUserError : public std::runtime_error {
 public:
  explicit UnknownUserError(const std::string& user)
      : std::runtime_error("unknown user id: " + user), user_(user) {}
  const std::string& user() const noexcept { return user_; }

 private:
  std::string user_;
};

enum class TweetType : std::uint8_t { Original = 0, Retweet = 1, Quote = 2, Reply = 3 };
enum class Stance : std::uint8_t { Supporting = 0, NotSupporting = 1 };

// How a child's stance relates to its parent's.
//   InheritedStance:  a retweet copies its parent's stance; quotes and replies
//                     switch stance through gamma.  The stance-k mass sent by
//                     event l is delta n_l (p_ret [k = k_l] + (1 - p_ret)
//                     gamma_{k_l,k}).  This is the process the simulator draws.
//   StanceTransition: every child, retweets included, takes stance k with
//                     probability gamma_{k_l,k}.
enum class RetweetAttribution { InheritedStance, StanceTransition };

inline constexpr std::size_t kNumTweetTypes = 4;
inline constexpr std::size_t kNumStances = 2;
inline constexpr std::array<TweetType, kNumTweetTypes> kTweetTypes = {
    TweetType::Original, TweetType::Retweet, TweetType::Quote, TweetType::Reply};
inline constexpr std::array<Stance, kNumStances> kStances = {Stance::Supporting,
                                                             Stance::NotSupporting};

constexpr std::size_t index_of(TweetType r) { return static_cast<std::size_t>(r); }
constexpr std::size_t index_of(Stance k) { return static_cast<std::size_t>(k); }

// Quote and reply children carry a stance drawn from the stance matrix;
// retweets inherit their parent's stance.
constexpr bool carries_own_stance(TweetType r) {
  return r == TweetType::Quote || r == TweetType::Reply;
}

std::string_view to_string(TweetType r);
std::string_view to_string(Stance k);
std::optional<TweetType> parse_tweet_type(std::string_view s);
std::optional<Stance> parse_stance(std::string_view s);

// One tweet.  `reach` caches the audience mass n_j once influence has been
// resolved against a follower graph.
struct Event {
  std::string id;
  double time = 0.0;  // hours
  std::string user;
  TweetType type = TweetType::Original;
  Stance stance = Stance::Supporting;
  std::optional<std::string> parent_id;
  double reach = 0.0;
  // Index of the parent inside the owning cascade, when the parent is present.
  std::optional<std::size_t> parent_index;
};

// Candidate ancestors of one event under network-restricted history.
struct AncestorSet {
  bool all_prior = true;
  std::vector<std::size_t> members;  // ascending, only meaningful if !all_prior
};

// Time-ordered event log over [0, horizon].  Events are sorted by (time, id)
// on construction and parent links are resolved to indices.
class Cascade {
 public:
  Cascade() = default;
  Cascade(std::vector<Event> events, double horizon);

  const std::vector<Event>& events() const noexcept { return events_; }
  const Event& operator[](std::size_t i) const { return events_[i]; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  double horizon() const noexcept { return horizon_; }

  std::optional<std::size_t> find(std::string_view id) const;

  // Ancestor sets exist only after network-restricted influence resolution.
  bool has_ancestor_sets() const noexcept { return !ancestors_.empty(); }
  const AncestorSet& ancestors(std::size_t j) const { return ancestors_.at(j); }

  // Copies with cached reach values / ancestor sets / corrected stances.
  Cascade with_reach(std::span<const double> reach) const;
  Cascade with_ancestor_sets(std::vector<AncestorSet> sets) const;
  Cascade with_stance(std::size_t j, Stance k) const;
  Cascade with_horizon(double horizon) const;

 private:
  std::vector<Event> events_;
  double horizon_ = 0.0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<AncestorSet> ancestors_;
};

using UserIndex = std::uint32_t;

// Directed follow relation stored as compressed follower lists.  An edge
// (follower, followee) means `follower` sees the tweets of `followee`.
class FollowerGraph {
 public:
  FollowerGraph() = default;
  // Self-loops are dropped and duplicate edges collapsed.  `user_count`
  // defaults to the number of names and may not be smaller than it.
  FollowerGraph(std::vector<std::string> user_names,
                std::vector<std::pair<UserIndex, UserIndex>> edges,
                std::optional<std::size_t> user_count = std::nullopt);

  std::size_t user_count() const noexcept { return user_count_; }
  std::size_t known_users() const noexcept { return names_.size(); }
  std::size_t edge_count() const noexcept { return followers_.size(); }
  std::size_t self_loops_dropped() const noexcept { return self_loops_dropped_; }
  std::size_t duplicates_dropped() const noexcept { return duplicates_dropped_; }

  std::optional<UserIndex> find(std::string_view user) const;
  UserIndex require(std::string_view user) const;  // throws UnknownUserError
  const std::string& name(UserIndex u) const { return names_.at(u); }

  std::span<const UserIndex> followers(UserIndex u) const;
  std::size_t follower_count(UserIndex u) const { return followers(u).size(); }
  bool follows(UserIndex follower, UserIndex followee) const;

  std::vector<std::pair<UserIndex, UserIndex>> edges() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, UserIndex> index_;
  std::vector<std::size_t> offsets_{0};
  std::vector<UserIndex> followers_;  // sorted within each followee block
  std::size_t user_count_ = 0;
  std::size_t self_loops_dropped_ = 0;
  std::size_t duplicates_dropped_ = 0;
};

// Full parameter vector of the stance/type-marked Hawkes model.
struct ModelParams {
  std::array<double, kNumStances> mu{0.0, 0.0};  // immigrants per hour
  double x_scale = 1.0;                           // arrival-profile scale, hours
  std::array<double, kNumTweetTypes> delta{0.0, 0.0, 0.0, 0.0};
  // gamma[from][to]; rows are stochastic.
  std::array<std::array<double, kNumStances>, kNumStances> gamma{{{1.0, 0.0}, {0.0, 1.0}}};
  std::array<double, kNumStances> omega{1.0, 1.0};  // 1/hours
  // Descendant type distribution over (retweet, quote, reply).
  std::array<double, 3> p_type{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double beta_follow = 0.95;
  double beta_reply_view = 0.05;
  double horizon = 1.0;  // T, hours
  std::size_t user_count = 0;

  double mu_of(Stance k) const { return mu[index_of(k)]; }
  double delta_of(TweetType r) const { return delta[index_of(r)]; }
  double gamma_of(Stance from, Stance to) const { return gamma[index_of(from)][index_of(to)]; }
  double omega_of(Stance k) const { return omega[index_of(k)]; }
  // Probability that a descendant has type r; zero for originals.
  double p_of(TweetType r) const {
    return r == TweetType::Original ? 0.0 : p_type[index_of(r) - 1];
  }

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

// Event counts: rows are stances, columns tweet types.
using CountsTable = std::array<std::array<std::size_t, kNumTweetTypes>, kNumStances>;
CountsTable count_events(const Cascade& cascade);
std::size_t total(const CountsTable& counts);

}  // namespace cascade_hawkes

#endif  // CASCADE_HAWKES_TYPES_HPP_
