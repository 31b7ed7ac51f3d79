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

#ifndef CASCADE_HAWKES_IO_HPP_
#define CASCADE_HAWKES_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade_hawkes/em.hpp"
#include "cascade_hawkes/simulator.hpp"
#include "cascade_hawkes/types.hpp"

namespace cascade_hawkes {

// Malformed input.  `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct IngestReport {
  std::size_t events_loaded = 0;
  std::vector<std::string> users_without_network;  // distinct, sorted
  std::vector<std::string> unresolved_parents;      // event ids whose parent is absent
  std::vector<std::string> stance_violations;       // retweets disagreeing with their parent
  std::size_t stance_corrections = 0;
  double fallback_reach = 0.0;
  std::size_t fallback_events = 0;
  CountsTable counts{};
};

struct ParsedEvents {
  Cascade cascade;
  IngestReport report;
};

// JSON-lines event log: {"id","t","user","type","stance","parent"} per line.
// Without `horizon` the cascade horizon is the last event time; an empty log
// needs an explicit horizon.  Errors carry the offending line number.
ParsedEvents parse_events(std::istream& in, std::optional<double> horizon = std::nullopt);
ParsedEvents parse_events(const std::filesystem::path& path,
                          std::optional<double> horizon = std::nullopt);

// Canonical JSON-lines form, one event per line in cascade order.
void write_events(std::ostream& out, const Cascade& cascade);

// CSV `follower,followee`, optional header line; an optional leading
// `# users=N` comment fixes the user universe size.  Self-loops are dropped
// and counted, duplicates collapsed.
FollowerGraph parse_edges(std::istream& in);
FollowerGraph parse_edges(const std::filesystem::path& path);
void write_edges(std::ostream& out, const FollowerGraph& graph);

struct InfluenceOptions {
  HistoryMode mode = HistoryMode::Full;
  // Reach for authors without network data.  Defaults to the median known
  // reach, or 1 when no author has network data.
  std::optional<double> fallback_reach;
  double beta_follow = 0.95;
  double beta_reply_view = 0.05;
};

struct ResolvedCascade {
  Cascade cascade;
  IngestReport report;
};

// Caches n_j for every event and, in network-restricted mode, records each
// event's admissible ancestors: the resolved parent chain when the parent is
// in the log; otherwise prior events by users the author follows; otherwise
// every prior event.
ResolvedCascade resolve_influence(const Cascade& cascade, const FollowerGraph& graph,
                                  const InfluenceOptions& options = {});

enum class StancePolicy { Warn, Correct };

struct AssumptionCheck {
  Cascade cascade;  // corrected copy under StancePolicy::Correct
  std::vector<std::string> violations;
  std::size_t corrected = 0;
};

// Flags retweets whose stance differs from their resolved parent's stance.
// Retweets with unresolved parents are not checked.
AssumptionCheck validate_assumptions(const Cascade& cascade,
                                     StancePolicy policy = StancePolicy::Warn);

// Fit against a raw cascade: resolves influence with `graph` first.
FitReport fit(const Cascade& cascade, const FollowerGraph& graph, const EMConfig& config = {});

// Parameter documents keyed mu_s, mu_n, x, delta_*, gamma_*, omega_*, p_*, T, U.
nlohmann::ordered_json params_to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& doc);
ModelParams read_params(const std::filesystem::path& path);

nlohmann::ordered_json counts_to_json(const CountsTable& counts);
nlohmann::ordered_json fit_report_to_json(const FitReport& report);
nlohmann::ordered_json ingest_report_to_json(const IngestReport& report);

}  // namespace cascade_hawkes

#endif  // CASCADE_HAWKES_IO_HPP_
