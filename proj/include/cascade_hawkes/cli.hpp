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

#ifndef CASCADE_HAWKES_CLI_HPP_
#define CASCADE_HAWKES_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "cascade_hawkes/em.hpp"

namespace cascade_hawkes::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,          // bad flags or unreadable / malformed input
  kNotConverged = 2,   // fit ran out of iterations or hit a numerical failure
  kRefused = 3,        // supercritical params, or too few events for a KS test
};

struct SimulateOptions {
  std::filesystem::path params;
  std::optional<std::filesystem::path> edges;  // generated when absent
  std::size_t users = 5000;
  double mean_followers = 20.0;
  double exponent = 2.5;
  std::uint64_t seed = 1;
  std::size_t max_events = 1'000'000;
  bool force = false;
  std::filesystem::path out_dir = ".";
};

struct FitOptions {
  std::filesystem::path events;
  std::optional<std::filesystem::path> edges;
  std::optional<double> horizon;
  double epsilon = 1e-6;
  std::size_t max_iters = 500;
  HistoryMode history = HistoryMode::Full;
  ImmigrantRule immigrant_rule = ImmigrantRule::OriginalsOnly;
  RetweetAttribution retweet_attribution = RetweetAttribution::InheritedStance;
  std::uint64_t seed = 1;  // recorded only; the fit is deterministic
  std::filesystem::path out_dir = ".";
};

struct IntensityOptions {
  std::filesystem::path events;
  std::filesystem::path params;
  std::optional<std::filesystem::path> edges;
  std::size_t grid = 200;
  RetweetAttribution retweet_attribution = RetweetAttribution::InheritedStance;
  std::filesystem::path out_dir = ".";
};

struct ResidualsOptions {
  std::filesystem::path events;
  std::filesystem::path params;
  std::optional<std::filesystem::path> edges;
  RetweetAttribution retweet_attribution = RetweetAttribution::InheritedStance;
  std::filesystem::path out_dir = ".";
};

// Each command writes its outputs plus manifest.json into out_dir and logs
// human-readable progress and errors to `log`.
int cmd_simulate(const SimulateOptions& options, std::ostream& log);
int cmd_fit(const FitOptions& options, std::ostream& log);
int cmd_intensity(const IntensityOptions& options, std::ostream& log);
int cmd_residuals(const ResidualsOptions& options, std::ostream& log);

// Worker threads for the E-step: hardware concurrency, capped by the
// CASCADE_HAWKES_THREADS environment variable when set.
unsigned thread_budget();

int run(int argc, char** argv);

}  // namespace cascade_hawkes::cli

#endif  // CASCADE_HAWKES_CLI_HPP_
