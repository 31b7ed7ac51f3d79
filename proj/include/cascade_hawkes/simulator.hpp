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

#ifndef CASCADE_HAWKES_SIMULATOR_HPP_
#define CASCADE_HAWKES_SIMULATOR_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "cascade_hawkes/types.hpp"

namespace cascade_hawkes {

using Rng = std::mt19937_64;

// Random follower graph over users "u0".."u{n-1}".  Follower counts are
// heavy tailed (Pareto weights with the given exponent) and rescaled so the
// realized mean follower count matches `mean_followers`; followers of each
// user are drawn uniformly without replacement.
// Throws std::invalid_argument if mean_followers >= user_count (for
// user_count > 1) or the inputs are out of range.
FollowerGraph generate_network(std::size_t user_count, double mean_followers,
                               std::uint64_t seed, double exponent = 2.5);

enum class UserAssignment { Uniform, FollowerProportional };

struct SimConfig {
  ModelParams params;
  std::shared_ptr<const FollowerGraph> graph;
  std::uint64_t seed = 1;
  std::size_t max_events = 1'000'000;
  UserAssignment user_assignment = UserAssignment::Uniform;
  // Simulate even when the descendant branching ratio is >= 1.
  bool force = false;
};

struct SimReport {
  Cascade cascade;
  CountsTable counts{};
  bool truncated = false;            // max_events reached
  std::size_t past_horizon = 0;      // children discarded because they fell after T
};

// Per-stance Poisson(mu_k T) originals with truncated-exponential arrival times.
std::vector<Event> sample_immigrants(const SimConfig& config, Rng& rng);

// Direct children of `parent`.  Requires parent.reach to be set.  Child ids
// are left empty; simulate_cascade assigns them.
std::vector<Event> sample_offspring(const Event& parent, const Event* grandparent,
                                    const SimConfig& config, Rng& rng);

// Immigrants followed by breadth-first branching until no children remain
// inside [0, T] or max_events is hit.  Ids are "e<k>" in time order.
// Throws std::domain_error when the branching ratio is >= 1 and !force.
SimReport simulate_cascade(const SimConfig& config);

struct BranchingSummary {
  double mean_reach = 0.0;            // mean over users of beta_follow * followers
  double immigrant_offspring = 0.0;   // expected direct children of an original
  double descendant_ratio = 0.0;      // expected children of a descendant
  bool subcritical() const { return descendant_ratio < 1.0; }
};

// Originals cannot be re-generated, so the descendant ratio alone decides
// whether cascades die out.
BranchingSummary branching_ratio(const ModelParams& params, const FollowerGraph& graph);

}  // namespace cascade_hawkes

#endif  // CASCADE_HAWKES_SIMULATOR_HPP_
