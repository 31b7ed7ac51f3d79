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

#include "cascade_hawkes/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascade_hawkes/goodness_of_fit.hpp"
#include "cascade_hawkes/io.hpp"
#include "cascade_hawkes/model.hpp"
#include "cascade_hawkes/simulator.hpp"

namespace cascade_hawkes::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kMinResidualEvents = 10;
constexpr double kKsAlpha = 0.01;

const char* retweets_name(RetweetAttribution a) {
  return a == RetweetAttribution::InheritedStance ? "inherit" : "transition";
}

class Manifest {
 public:
  explicit Manifest(std::string subcommand)
      : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["version"] = CASCADE_HAWKES_VERSION;
    doc_["config"] = ordered_json::object();
    doc_["inputs"] = ordered_json::object();
    doc_["outputs"] = ordered_json::object();
  }

  void config(const std::string& key, ordered_json value) { doc_["config"][key] = std::move(value); }
  void input(const std::string& key, const fs::path& p) { doc_["inputs"][key] = p.string(); }
  void output(const std::string& key, const fs::path& p) { doc_["outputs"][key] = p.string(); }
  void seed(std::uint64_t s) { doc_["seed"] = s; }

  void write(const fs::path& out_dir, int exit_code) {
    doc_["exit_code"] = exit_code;
    doc_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(out_dir / "manifest.json");
    out << doc_.dump(2) << '\n';
  }

 private:
  ordered_json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const ordered_json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

FollowerGraph load_graph(const std::optional<fs::path>& edges) {
  if (edges) return parse_edges(*edges);
  return FollowerGraph();
}

// Events with reaches resolved against the optional edge list.
ResolvedCascade load_events(const fs::path& events, const std::optional<fs::path>& edges,
                            std::optional<double> horizon, HistoryMode mode,
                            const ModelParams* params = nullptr) {
  ParsedEvents parsed = parse_events(events, horizon);
  InfluenceOptions influence;
  influence.mode = mode;
  if (params) {
    influence.beta_follow = params->beta_follow;
    influence.beta_reply_view = params->beta_reply_view;
  }
  return resolve_influence(parsed.cascade, load_graph(edges), influence);
}

}  // namespace

unsigned thread_budget() {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CASCADE_HAWKES_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) threads = std::min<unsigned>(threads, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      // Ignore an unparseable cap.
    }
  }
  return threads;
}

int cmd_simulate(const SimulateOptions& options, std::ostream& log) {
  Manifest manifest("simulate");
  manifest.seed(options.seed);
  manifest.input("params", options.params);
  manifest.config("max_events", options.max_events);
  manifest.config("force", options.force);
  try {
    fs::create_directories(options.out_dir);
    SimConfig config;
    config.params = read_params(options.params);
    config.seed = options.seed;
    config.max_events = options.max_events;
    config.force = options.force;
    if (options.edges) {
      manifest.input("edges", *options.edges);
      config.graph = std::make_shared<const FollowerGraph>(parse_edges(*options.edges));
    } else {
      manifest.config("users", options.users);
      manifest.config("mean_followers", options.mean_followers);
      manifest.config("exponent", options.exponent);
      config.graph = std::make_shared<const FollowerGraph>(generate_network(
          options.users, options.mean_followers, options.seed, options.exponent));
    }
    if (config.graph->user_count() == 0) throw std::invalid_argument("the graph has no users");
    config.params.user_count = config.graph->user_count();

    const BranchingSummary branching = branching_ratio(config.params, *config.graph);
    ordered_json branching_doc;
    branching_doc["mean_reach"] = branching.mean_reach;
    branching_doc["immigrant_offspring"] = branching.immigrant_offspring;
    branching_doc["descendant_ratio"] = branching.descendant_ratio;
    if (!branching.subcritical() && !options.force) {
      log << "refusing to simulate: descendant branching ratio " << branching.descendant_ratio
          << " >= 1 (pass --force to override)\n";
      manifest.config("branching", branching_doc);
      manifest.write(options.out_dir, kRefused);
      return kRefused;
    }

    const SimReport report = simulate_cascade(config);

    const fs::path events_path = options.out_dir / "events.jsonl";
    {
      auto out = open_output(events_path);
      write_events(out, report.cascade);
    }
    manifest.output("events", events_path);

    ordered_json counts;
    counts["events"] = report.cascade.size();
    counts["horizon"] = report.cascade.horizon();
    counts["counts"] = counts_to_json(report.counts);
    counts["truncated"] = report.truncated;
    counts["past_horizon"] = report.past_horizon;
    counts["branching"] = branching_doc;
    const fs::path counts_path = options.out_dir / "counts.json";
    write_json(counts_path, counts);
    manifest.output("counts", counts_path);

    if (!options.edges) {
      const fs::path edges_path = options.out_dir / "edges.csv";
      auto out = open_output(edges_path);
      write_edges(out, *config.graph);
      manifest.output("edges", edges_path);
    }

    log << "simulated " << report.cascade.size() << " events";
    if (report.truncated) log << " (truncated at --max-events)";
    log << '\n';
    manifest.write(options.out_dir, kOk);
    return kOk;
  } catch (const std::exception& e) {
    log << "simulate: " << e.what() << '\n';
    return kUsage;
  }
}

int cmd_fit(const FitOptions& options, std::ostream& log) {
  Manifest manifest("fit");
  manifest.seed(options.seed);
  manifest.input("events", options.events);
  if (options.edges) manifest.input("edges", *options.edges);
  manifest.config("epsilon", options.epsilon);
  manifest.config("max_iters", options.max_iters);
  manifest.config("history", options.history == HistoryMode::Full ? "full" : "network");
  manifest.config("immigrants",
                  options.immigrant_rule == ImmigrantRule::OriginalsOnly ? "originals" : "any");
  manifest.config("retweets", retweets_name(options.retweet_attribution));
  if (options.horizon) manifest.config("horizon", *options.horizon);

  ResolvedCascade resolved;
  try {
    fs::create_directories(options.out_dir);
    resolved = load_events(options.events, options.edges, options.horizon, options.history);
  } catch (const std::exception& e) {
    log << "fit: " << e.what() << '\n';
    return kUsage;
  }

  EMConfig config;
  config.epsilon = options.epsilon;
  config.max_iters = options.max_iters;
  config.history = options.history;
  config.immigrant_rule = options.immigrant_rule;
  config.retweet_attribution = options.retweet_attribution;
  config.threads = thread_budget();
  const FitReport report = fit(resolved.cascade, config);

  ordered_json doc = fit_report_to_json(report);
  doc["ingest"] = ingest_report_to_json(resolved.report);
  if (!options.edges) {
    doc["ingest"]["note"] = "no edge list supplied; every event uses the fallback reach";
  }
  const fs::path report_path = options.out_dir / "fit_report.json";
  try {
    write_json(report_path, doc);
  } catch (const std::exception& e) {
    log << "fit: " << e.what() << '\n';
    return kUsage;
  }
  manifest.output("fit_report", report_path);

  const int code = report.converged ? kOk : kNotConverged;
  log << (report.converged ? "converged" : "did not converge") << " after " << report.iterations
      << " iterations, log-likelihood " << report.loglik << '\n';
  if (!report.diagnostic.empty()) log << report.diagnostic << '\n';
  manifest.write(options.out_dir, code);
  return code;
}

int cmd_intensity(const IntensityOptions& options, std::ostream& log) {
  if (options.grid < 2) {
    log << "intensity: --grid must be at least 2\n";
    return kUsage;
  }
  Manifest manifest("intensity");
  manifest.input("events", options.events);
  manifest.input("params", options.params);
  if (options.edges) manifest.input("edges", *options.edges);
  manifest.config("grid", options.grid);
  manifest.config("retweets", retweets_name(options.retweet_attribution));
  try {
    fs::create_directories(options.out_dir);
    const ModelParams params = read_params(options.params);
    const ResolvedCascade resolved = load_events(options.events, options.edges, params.horizon,
                                                 HistoryMode::Full, &params);
    const fs::path csv_path = options.out_dir / "intensity.csv";
    auto out = open_output(csv_path);
    out << std::setprecision(17);
    out << "t,lambda_s,lambda_n,lambda\n";
    const double T = params.horizon;
    for (std::size_t i = 0; i < options.grid; ++i) {
      const double t = (i + 1 == options.grid)
                           ? T
                           : T * static_cast<double>(i) / static_cast<double>(options.grid - 1);
      const IntensityBreakdown b = total_intensity(params, resolved.cascade, t, options.retweet_attribution);
      const double ls = b.stance_total(Stance::Supporting);
      const double ln = b.stance_total(Stance::NotSupporting);
      out << t << ',' << ls << ',' << ln << ',' << ls + ln << '\n';
    }
    manifest.output("intensity", csv_path);
    manifest.write(options.out_dir, kOk);
    return kOk;
  } catch (const std::exception& e) {
    log << "intensity: " << e.what() << '\n';
    return kUsage;
  }
}

int cmd_residuals(const ResidualsOptions& options, std::ostream& log) {
  Manifest manifest("residuals");
  manifest.input("events", options.events);
  manifest.input("params", options.params);
  if (options.edges) manifest.input("edges", *options.edges);
  manifest.config("retweets", retweets_name(options.retweet_attribution));
  try {
    fs::create_directories(options.out_dir);
    const ModelParams params = read_params(options.params);
    const ResolvedCascade resolved = load_events(options.events, options.edges, params.horizon,
                                                 HistoryMode::Full, &params);
    const Cascade& cascade = resolved.cascade;
    if (cascade.empty()) {
      log << "residuals: the event log is empty\n";
      return kUsage;
    }
    if (cascade.size() < kMinResidualEvents) {
      log << "residuals: " << cascade.size() << " events is too few for a KS test (need "
          << kMinResidualEvents << ")\n";
      manifest.write(options.out_dir, kRefused);
      return kRefused;
    }
    const std::vector<double> lambda =
        compensator_at_events(params, cascade, options.retweet_attribution);
    std::vector<double> taus(lambda.size());
    std::adjacent_difference(lambda.begin(), lambda.end(), taus.begin());

    const fs::path csv_path = options.out_dir / "residuals.csv";
    {
      auto out = open_output(csv_path);
      out << std::setprecision(17);
      out << "index,id,t,compensator,interarrival\n";
      for (std::size_t j = 0; j < cascade.size(); ++j) {
        const Event& e = cascade.events()[j];
        out << j << ',' << e.id << ',' << e.time << ',' << lambda[j] << ',' << taus[j] << '\n';
      }
    }
    const KsResult ks = ks_test_exponential(taus);
    ordered_json doc;
    doc["n"] = ks.n;
    doc["statistic"] = ks.statistic;
    doc["p_value"] = ks.p_value;
    doc["alpha"] = kKsAlpha;
    doc["reject"] = ks.p_value < kKsAlpha;
    const fs::path ks_path = options.out_dir / "ks.json";
    write_json(ks_path, doc);
    manifest.output("residuals", csv_path);
    manifest.output("ks", ks_path);
    log << "KS D=" << ks.statistic << " p=" << ks.p_value << '\n';
    manifest.write(options.out_dir, kOk);
    return kOk;
  } catch (const std::exception& e) {
    log << "residuals: " << e.what() << '\n';
    return kUsage;
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Stance- and type-marked Hawkes models for news cascades"};
  app.set_version_flag("--version", std::string(CASCADE_HAWKES_VERSION));
  app.require_subcommand(1);

  const std::map<std::string, HistoryMode> history_map{{"full", HistoryMode::Full},
                                                       {"network", HistoryMode::NetworkRestricted}};
  const std::map<std::string, ImmigrantRule> immigrant_map{
      {"originals", ImmigrantRule::OriginalsOnly}, {"any", ImmigrantRule::AnyEvent}};
  const std::map<std::string, RetweetAttribution> retweet_map{
      {"inherit", RetweetAttribution::InheritedStance},
      {"transition", RetweetAttribution::StanceTransition}};

  SimulateOptions sim;
  std::string sim_edges;
  auto* simulate = app.add_subcommand("simulate", "Simulate a cascade from a parameter file");
  simulate->add_option("params", sim.params, "Parameter JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--edges", sim_edges, "Follower edge list; generated when omitted")
      ->check(CLI::ExistingFile);
  simulate->add_option("--users", sim.users, "Users in the generated graph")->check(CLI::PositiveNumber);
  simulate->add_option("--mean-followers", sim.mean_followers, "Mean followers per user")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--exponent", sim.exponent, "Pareto exponent of follower counts")
      ->check(CLI::Range(1.0 + 1e-9, 100.0));
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--max-events", sim.max_events, "Stop after this many events");
  simulate->add_flag("--force", sim.force, "Simulate supercritical parameters anyway");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory");

  FitOptions fo;
  std::string fit_edges;
  double fit_horizon = 0.0;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate parameters with EM");
  fit_cmd->add_option("events", fo.events, "Event log (JSON lines)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("edges", fit_edges, "Follower edge list")->check(CLI::ExistingFile);
  fit_cmd->add_option("--horizon", fit_horizon, "Observation window T (default: last event time)")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--epsilon", fo.epsilon, "Stop when |dQ| falls below this")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iters", fo.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--history", fo.history, "Candidate ancestors: full or network")
      ->transform(CLI::CheckedTransformer(history_map, CLI::ignore_case))
      ->option_text("full|network");
  fit_cmd->add_option("--immigrants", fo.immigrant_rule, "Background events: originals or any")
      ->transform(CLI::CheckedTransformer(immigrant_map, CLI::ignore_case))
      ->option_text("originals|any");
  fit_cmd->add_option("--retweets", fo.retweet_attribution,
                      "Retweet parents: inherit (same stance) or transition (gamma-weighted)")
      ->transform(CLI::CheckedTransformer(retweet_map, CLI::ignore_case))
      ->option_text("inherit|transition");
  fit_cmd->add_option("--seed", fo.seed, "Recorded in the manifest");
  fit_cmd->add_option("--out-dir", fo.out_dir, "Output directory");

  IntensityOptions io;
  std::string int_edges;
  auto* intensity = app.add_subcommand("intensity", "Tabulate stance intensities on a grid");
  intensity->add_option("events", io.events, "Event log")->required()->check(CLI::ExistingFile);
  intensity->add_option("params", io.params, "Parameter JSON")->required()->check(CLI::ExistingFile);
  intensity->add_option("edges", int_edges, "Follower edge list")->check(CLI::ExistingFile);
  intensity->add_option("--grid", io.grid, "Number of grid points over [0, T]");
  intensity->add_option("--retweets", io.retweet_attribution,
                        "Child stance: inherit (retweets copy) or transition (gamma for all)")
      ->transform(CLI::CheckedTransformer(retweet_map, CLI::ignore_case))
      ->option_text("inherit|transition");
  intensity->add_option("--out-dir", io.out_dir, "Output directory");

  ResidualsOptions ro;
  std::string res_edges;
  auto* residuals = app.add_subcommand("residuals", "Time-rescaling residuals and KS test");
  residuals->add_option("events", ro.events, "Event log")->required()->check(CLI::ExistingFile);
  residuals->add_option("params", ro.params, "Parameter JSON")->required()->check(CLI::ExistingFile);
  residuals->add_option("edges", res_edges, "Follower edge list")->check(CLI::ExistingFile);
  residuals->add_option("--retweets", ro.retweet_attribution,
                        "Child stance: inherit (retweets copy) or transition (gamma for all)")
      ->transform(CLI::CheckedTransformer(retweet_map, CLI::ignore_case))
      ->option_text("inherit|transition");
  residuals->add_option("--out-dir", ro.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  auto path_or_none = [](const std::string& s) -> std::optional<fs::path> {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
  };
  if (simulate->parsed()) {
    sim.edges = path_or_none(sim_edges);
    return cmd_simulate(sim, std::cerr);
  }
  if (fit_cmd->parsed()) {
    fo.edges = path_or_none(fit_edges);
    if (fit_horizon > 0.0) fo.horizon = fit_horizon;
    return cmd_fit(fo, std::cerr);
  }
  if (intensity->parsed()) {
    io.edges = path_or_none(int_edges);
    return cmd_intensity(io, std::cerr);
  }
  ro.edges = path_or_none(res_edges);
  return cmd_residuals(ro, std::cerr);
}

}  // namespace cascade_hawkes::cli
