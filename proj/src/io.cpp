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

#include "cascade_hawkes/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "cascade_hawkes/model.hpp"

namespace cascade_hawkes {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return in;
}

const json& field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", line);
  return *it;
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string", line);
  return v.get<std::string>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Event logs

ParsedEvents parse_events(std::istream& in, std::optional<double> horizon) {
  std::vector<Event> events;
  std::unordered_map<std::string, std::size_t> line_of;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = trim(raw);
    if (text.empty()) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!obj.is_object()) throw ParseError("record must be a JSON object", line);

    Event e;
    e.id = string_field(obj, "id", line);
    const json& t = field(obj, "t", line);
    if (!t.is_number()) throw ParseError("field 't' must be a number", line);
    e.time = t.get<double>();
    if (!std::isfinite(e.time) || e.time < 0.0) throw ParseError("time must be >= 0", line);
    e.user = string_field(obj, "user", line);
    const std::string type = string_field(obj, "type", line);
    auto r = parse_tweet_type(type);
    if (!r) throw ParseError("unknown tweet type '" + type + "'", line);
    e.type = *r;
    const std::string stance = string_field(obj, "stance", line);
    auto k = parse_stance(stance);
    if (!k) throw ParseError("unknown stance '" + stance + "'", line);
    e.stance = *k;
    if (auto it = obj.find("parent"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError("field 'parent' must be a string or null", line);
      e.parent_id = it->get<std::string>();
    }
    if (!line_of.emplace(e.id, line).second) throw ParseError("duplicate event id '" + e.id + "'", line);
    events.push_back(std::move(e));
  }

  std::unordered_map<std::string, double> time_of;
  for (const Event& e : events) time_of.emplace(e.id, e.time);
  for (const Event& e : events) {
    if (!e.parent_id) continue;
    auto it = time_of.find(*e.parent_id);
    if (it != time_of.end() && it->second >= e.time) {
      throw ParseError("parent '" + *e.parent_id + "' does not precede event '" + e.id + "'",
                       line_of[e.id]);
    }
  }

  double last = 0.0;
  for (const Event& e : events) last = std::max(last, e.time);
  double T = last;
  if (horizon) {
    if (*horizon < last) throw ParseError("horizon is earlier than the last event", 0);
    T = *horizon;
  } else if (events.empty()) {
    throw ParseError("empty event log: an explicit horizon is required", 0);
  }
  if (!(T > 0.0)) throw ParseError("horizon must be positive", 0);

  ParsedEvents out{Cascade(std::move(events), T), {}};
  out.report.events_loaded = out.cascade.size();
  for (const Event& e : out.cascade.events()) {
    if (e.parent_id && !e.parent_index) out.report.unresolved_parents.push_back(e.id);
  }
  out.report.stance_violations = validate_assumptions(out.cascade).violations;
  out.report.counts = count_events(out.cascade);
  return out;
}

ParsedEvents parse_events(const std::filesystem::path& path, std::optional<double> horizon) {
  auto in = open_input(path);
  return parse_events(in, horizon);
}

void write_events(std::ostream& out, const Cascade& cascade) {
  for (const Event& e : cascade.events()) {
    ordered_json obj;
    obj["id"] = e.id;
    obj["t"] = e.time;
    obj["user"] = e.user;
    obj["type"] = to_string(e.type);
    obj["stance"] = to_string(e.stance);
    obj["parent"] = e.parent_id ? ordered_json(*e.parent_id) : ordered_json(nullptr);
    out << obj.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Edge lists

FollowerGraph parse_edges(std::istream& in) {
  std::vector<std::string> names;
  std::unordered_map<std::string, UserIndex> index;
  std::vector<std::pair<UserIndex, UserIndex>> edges;
  std::optional<std::size_t> declared;
  auto intern = [&](std::string_view name) {
    auto [it, inserted] = index.emplace(std::string(name), static_cast<UserIndex>(names.size()));
    if (inserted) names.emplace_back(name);
    return it->second;
  };

  std::string raw;
  std::size_t line = 0;
  bool seen_data = false;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = trim(raw);
    if (text.empty()) continue;
    if (text.front() == '#') {
      std::string_view body = trim(text.substr(1));
      if (body.rfind("users=", 0) == 0) {
        try {
          declared = std::stoull(std::string(body.substr(6)));
        } catch (const std::exception&) {
          throw ParseError("invalid users declaration", line);
        }
      }
      continue;
    }
    if (!seen_data && text == "follower,followee") {
      seen_data = true;
      continue;
    }
    seen_data = true;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError("expected 'follower,followee'", line);
    }
    std::string_view a = trim(text.substr(0, comma));
    std::string_view b = trim(text.substr(comma + 1));
    if (a.empty() || b.empty()) throw ParseError("empty user id", line);
    const UserIndex fa = intern(a);
    const UserIndex fb = intern(b);
    edges.emplace_back(fa, fb);
  }
  std::optional<std::size_t> count;
  if (declared) count = std::max(*declared, names.size());
  return FollowerGraph(std::move(names), std::move(edges), count);
}

FollowerGraph parse_edges(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_edges(in);
}

void write_edges(std::ostream& out, const FollowerGraph& graph) {
  if (graph.user_count() != graph.known_users()) out << "# users=" << graph.user_count() << '\n';
  out << "follower,followee\n";
  for (const auto& [follower, followee] : graph.edges()) {
    out << graph.name(follower) << ',' << graph.name(followee) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Influence resolution

ResolvedCascade resolve_influence(const Cascade& cascade, const FollowerGraph& graph,
                                  const InfluenceOptions& options) {
  const std::size_t n = cascade.size();
  std::vector<double> reach(n, 0.0);
  std::vector<char> known(n, 0);
  std::set<std::string> missing_users;
  std::vector<double> known_reach;
  IngestReport report;

  for (std::size_t j = 0; j < n; ++j) {
    const Event& e = cascade[j];
    if (e.parent_id && !e.parent_index) report.unresolved_parents.push_back(e.id);
    if (!graph.find(e.user)) {
      missing_users.insert(e.user);
      continue;
    }
    std::optional<std::string_view> parent_author;
    if (e.parent_index) parent_author = cascade[*e.parent_index].user;
    reach[j] = event_reach(graph, e, parent_author, options.beta_follow, options.beta_reply_view);
    known[j] = 1;
    known_reach.push_back(reach[j]);
  }

  // Unit reach when nothing is known, so excitation stays identifiable.
  double fallback = 1.0;
  if (options.fallback_reach) {
    fallback = *options.fallback_reach;
  } else if (!known_reach.empty()) {
    auto mid = known_reach.begin() + static_cast<std::ptrdiff_t>(known_reach.size() / 2);
    std::nth_element(known_reach.begin(), mid, known_reach.end());
    fallback = *mid;
    if (known_reach.size() % 2 == 0) {
      fallback = 0.5 * (fallback + *std::max_element(known_reach.begin(), mid));
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!known[j]) {
      reach[j] = fallback;
      ++report.fallback_events;
    }
  }
  report.fallback_reach = fallback;
  report.users_without_network.assign(missing_users.begin(), missing_users.end());

  Cascade resolved = cascade.with_reach(reach);
  if (options.mode == HistoryMode::NetworkRestricted) {
    std::vector<AncestorSet> sets(n);
    for (std::size_t j = 0; j < n; ++j) {
      const Event& e = cascade[j];
      AncestorSet& set = sets[j];
      if (e.parent_index) {
        set.all_prior = false;
        for (auto p = e.parent_index; p; p = cascade[*p].parent_index) set.members.push_back(*p);
        std::sort(set.members.begin(), set.members.end());
        continue;
      }
      auto observer = graph.find(e.user);
      if (!observer) continue;
      for (std::size_t l = 0; l < j && cascade[l].time < e.time; ++l) {
        const Event& el = cascade[l];
        auto author = graph.find(el.user);
        bool visible = author && graph.follows(*observer, *author);
        if (!visible && el.type == TweetType::Reply && el.parent_index) {
          auto pa = graph.find(cascade[*el.parent_index].user);
          visible = pa && graph.follows(*observer, *pa);
        }
        if (visible) set.members.push_back(l);
      }
      set.all_prior = set.members.empty();
    }
    resolved = resolved.with_ancestor_sets(std::move(sets));
  }

  report.events_loaded = n;
  report.counts = count_events(resolved);
  report.stance_violations = validate_assumptions(resolved).violations;
  return {std::move(resolved), std::move(report)};
}

AssumptionCheck validate_assumptions(const Cascade& cascade, StancePolicy policy) {
  AssumptionCheck out{cascade, {}, 0};
  std::vector<Stance> stance(cascade.size());
  for (std::size_t j = 0; j < cascade.size(); ++j) {
    const Event& e = cascade[j];
    stance[j] = e.stance;
    if (e.type != TweetType::Retweet || !e.parent_index) continue;
    const Stance parent = stance[*e.parent_index];
    if (parent == e.stance) continue;
    out.violations.push_back(e.id);
    if (policy == StancePolicy::Correct) {
      stance[j] = parent;
      out.cascade = out.cascade.with_stance(j, parent);
      ++out.corrected;
    }
  }
  return out;
}

FitReport fit(const Cascade& cascade, const FollowerGraph& graph, const EMConfig& config) {
  InfluenceOptions opts;
  opts.mode = config.history;
  return fit(resolve_influence(cascade, graph, opts).cascade, config);
}

// ---------------------------------------------------------------------------
// JSON documents

ordered_json params_to_json(const ModelParams& p) {
  ordered_json j;
  j["mu_s"] = p.mu[0];
  j["mu_n"] = p.mu[1];
  j["x"] = p.x_scale;
  j["delta_ori"] = p.delta[0];
  j["delta_ret"] = p.delta[1];
  j["delta_quo"] = p.delta[2];
  j["delta_rply"] = p.delta[3];
  j["gamma_ss"] = p.gamma[0][0];
  j["gamma_sn"] = p.gamma[0][1];
  j["gamma_ns"] = p.gamma[1][0];
  j["gamma_nn"] = p.gamma[1][1];
  j["omega_s"] = p.omega[0];
  j["omega_n"] = p.omega[1];
  j["p_ret"] = p.p_type[0];
  j["p_quo"] = p.p_type[1];
  j["p_rply"] = p.p_type[2];
  j["T"] = p.horizon;
  j["U"] = p.user_count;
  return j;
}

ModelParams params_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("parameter document must be a JSON object", 0);
  auto num = [&](const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_number()) {
      throw ParseError(std::string("parameter '") + key + "' missing or not a number", 0);
    }
    return it->get<double>();
  };
  ModelParams p;
  p.mu = {num("mu_s"), num("mu_n")};
  p.x_scale = num("x");
  p.delta = {num("delta_ori"), num("delta_ret"), num("delta_quo"), num("delta_rply")};
  p.gamma = {{{num("gamma_ss"), num("gamma_sn")}, {num("gamma_ns"), num("gamma_nn")}}};
  p.omega = {num("omega_s"), num("omega_n")};
  p.p_type = {num("p_ret"), num("p_quo"), num("p_rply")};
  p.horizon = num("T");
  if (auto it = doc.find("U"); it != doc.end()) {
    if (!it->is_number_unsigned()) throw ParseError("parameter 'U' must be a nonnegative integer", 0);
    p.user_count = it->get<std::size_t>();
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid parameters: ") + e.what(), 0);
  }
  return p;
}

ModelParams read_params(const std::filesystem::path& path) {
  auto in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  return params_from_json(doc);
}

ordered_json counts_to_json(const CountsTable& counts) {
  ordered_json out;
  for (Stance k : kStances) {
    ordered_json row;
    std::size_t sum = 0;
    for (TweetType r : kTweetTypes) {
      row[std::string(to_string(r))] = counts[index_of(k)][index_of(r)];
      sum += counts[index_of(k)][index_of(r)];
    }
    row["total"] = sum;
    out[std::string(to_string(k))] = row;
  }
  out["total"] = total(counts);
  return out;
}

ordered_json fit_report_to_json(const FitReport& report) {
  ordered_json out;
  out["params"] = params_to_json(report.params);
  out["loglik"] = report.loglik;
  out["initial_loglik"] = report.initial_loglik;
  out["iterations"] = report.iterations;
  out["converged"] = report.converged;
  out["max_normalization_error"] = report.max_normalization_error;
  out["retained"] = report.retained;
  out["diagnostic"] = report.diagnostic;
  out["q_trace"] = report.q_trace;
  return out;
}

ordered_json ingest_report_to_json(const IngestReport& report) {
  ordered_json out;
  out["events_loaded"] = report.events_loaded;
  out["users_without_network"] = report.users_without_network.size();
  out["unresolved_parents"] = report.unresolved_parents.size();
  out["stance_violations"] = report.stance_violations.size();
  out["stance_corrections"] = report.stance_corrections;
  out["fallback_reach"] = report.fallback_reach;
  out["fallback_events"] = report.fallback_events;
  out["counts"] = counts_to_json(report.counts);
  return out;
}

}  // namespace cascade_hawkes
