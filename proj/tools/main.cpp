// Command-line front end: run simulations, summarize transcripts,
// classify reasoning, sweep parameter ablations, and replay-validate
// existing transcripts.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sanctsim/analysis.hpp"
#include "sanctsim/engine.hpp"
#include "sanctsim/metrics.hpp"
#include "sanctsim/store.hpp"

namespace fs = std::filesystem;
using namespace sanctsim;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> transcripts;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> jobs;
  bool mock = false;
  std::string out;
};

RunConfig load_with_overrides(const CommonOptions& opts) {
  RunConfig config = opts.config_path.empty()
                         ? RunConfig{}
                         : load_run_config(opts.config_path);
  if (opts.config_path.empty()) {
    // Default roster: seven scripted full cooperators.
    for (int i = 0; i < config.params.group_size; ++i) {
      AgentSpec spec;
      spec.policy = "full_cooperator";
      config.roster.push_back(spec);
    }
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.runs) config.runs = *opts.runs;
  if (opts.jobs) config.jobs = *opts.jobs;
  if (!opts.out.empty()) config.out_dir = opts.out;
  config.validate();
  return config;
}

std::string roster_label(const RunConfig& config) {
  if (config.roster.empty()) return "roster";
  const AgentSpec& first = config.roster.front();
  if (!first.name.empty()) return first.name;
  if (first.kind == "llm" && !first.provider.model_id.empty())
    return first.provider.model_id;
  return first.policy.empty() ? "roster" : first.policy;
}

int cmd_run(const CommonOptions& opts) {
  RunConfig config = load_with_overrides(opts);
  fs::create_directories(config.out_dir);

  std::vector<std::optional<MetricsSummary>> summaries(config.runs);
  std::vector<std::string> errors(config.runs);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < config.runs; i = next.fetch_add(1)) {
      try {
        RunConfig local = config;
        local.seed = config.seed + static_cast<std::uint64_t>(i);
        std::vector<PolicyPtr> roster = build_roster(local, opts.mock);
        RunTranscript transcript =
            run_simulation(local.engine_config(), roster);
        const std::string path =
            (fs::path(config.out_dir) /
             ("run_" + std::to_string(local.seed) + ".jsonl"))
                .string();
        save_transcript(transcript, path);
        summaries[i] = run_metrics(transcript);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n_workers = std::min(config.jobs, config.runs);
  std::vector<std::thread> threads;
  for (int w = 1; w < n_workers; ++w) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();

  std::vector<MetricsSummary> completed;
  for (int i = 0; i < config.runs; ++i) {
    if (summaries[i]) {
      completed.push_back(*summaries[i]);
    } else {
      std::cerr << "run " << i << " failed: " << errors[i] << "\n";
    }
  }
  if (completed.empty()) {
    std::cerr << "all runs failed\n";
    return 1;
  }
  std::cout << metrics_csv_header() << "\n"
            << metrics_csv_row(roster_label(config),
                               aggregate_runs(completed))
            << "\n";
  return 0;
}

int cmd_metrics(const CommonOptions& opts) {
  if (opts.transcripts.empty()) {
    std::cerr << "no transcripts given\n";
    return 1;
  }
  std::vector<MetricsSummary> summaries;
  std::ostringstream csv;
  csv << metrics_csv_header() << '\n';
  for (const std::string& path : opts.transcripts) {
    try {
      RunTranscript t = load_transcript(path);
      MetricsSummary s = run_metrics(t);
      summaries.push_back(s);
      csv << metrics_csv_row(fs::path(path).stem().string(), s) << '\n';
      std::ofstream series(path + ".series.csv");
      series << series_csv(contribution_series(t));
    } catch (const std::exception& e) {
      std::cerr << path << ": " << e.what() << "\n";
    }
  }
  if (summaries.empty()) {
    std::cerr << "no readable transcripts\n";
    return 1;
  }
  csv << metrics_csv_row("aggregate", aggregate_runs(summaries)) << '\n';
  std::cout << csv.str();
  if (!opts.out.empty()) {
    std::ofstream out(opts.out);
    out << csv.str();
  }
  return 0;
}

int cmd_classify(const CommonOptions& opts) {
  if (opts.transcripts.empty()) {
    std::cerr << "no transcripts given\n";
    return 1;
  }
  BackendPtr backend;
  if (opts.mock) {
    backend = make_keyword_classifier_backend();
  } else {
    if (opts.config_path.empty()) {
      std::cerr << "classification needs --config with a provider, or --mock\n";
      return 1;
    }
    RunConfig config = load_run_config(opts.config_path);
    for (const AgentSpec& spec : config.roster) {
      if (spec.kind == "llm") {
        backend = make_http_backend(spec.provider);
        break;
      }
    }
    if (!backend) {
      std::cerr << "config has no llm roster entry to supply a provider\n";
      return 1;
    }
  }

  const fs::path out_dir = opts.out.empty() ? fs::path("classify_out")
                                            : fs::path(opts.out);
  fs::create_directories(out_dir);
  LabelStore store((out_dir / "labels.jsonl").string());
  PromptKit kit;

  // (model, run) -> archetype of that run's contribution trajectory.
  std::map<std::pair<std::string, int>, ArchetypeVariant> archetypes;
  for (const std::string& path : opts.transcripts) {
    RunTranscript t = load_transcript(path);
    const std::string model = t.roster.empty() ? "roster" : t.roster.front();
    const int run = static_cast<int>(t.seed);
    if (t.rounds.size() >= 3) {
      archetypes[{model, run}] =
          classify_archetype(contribution_series(t), t.params).variant;
    }
    for (const RoundRecord& round : t.rounds) {
      for (std::size_t agent = 0; agent < round.agents.size(); ++agent) {
        const AgentRoundRecord& a = round.agents[agent];
        const std::pair<const char*, const std::string*> statements[] = {
            {"INSTITUTION", &a.institution_reasoning},
            {"CONTRIBUTION", &a.contribution_reasoning},
            {"SANCTION", &a.sanction_reasoning},
        };
        for (const auto& [decision_type, text] : statements) {
          if (text->empty()) continue;
          if (store.contains(model, run, round.round_number,
                             static_cast<int>(agent), decision_type))
            continue;
          TaxonomyLabel label = classify_reasoning(*backend, kit, *text);
          label.model = model;
          label.run = run;
          label.round = round.round_number;
          label.agent = static_cast<int>(agent);
          label.decision_type = decision_type;
          store.append(label);
        }
      }
    }
  }

  // Aggregate per decision type x archetype, plus pooled columns.
  const char* decisions[] = {"INSTITUTION", "CONTRIBUTION", "SANCTION"};
  const ArchetypeVariant variants[] = {
      ArchetypeVariant::INCREASINGLY_COOPERATIVE,
      ArchetypeVariant::INCREASINGLY_DEFECTING, ArchetypeVariant::NO_CHANGE,
      ArchetypeVariant::UNSTABLE};
  auto archetype_of = [&](const TaxonomyLabel& l)
      -> std::optional<ArchetypeVariant> {
    auto it = archetypes.find({l.model, l.run});
    if (it == archetypes.end()) return std::nullopt;
    return it->second;
  };
  for (const char* decision : decisions) {
    std::vector<std::pair<std::string, StrategyUsage>> columns;
    for (ArchetypeVariant v : variants) {
      std::vector<TaxonomyLabel> group;
      for (const TaxonomyLabel& l : store.labels()) {
        if (l.decision_type != decision) continue;
        auto a = archetype_of(l);
        if (a && *a == v) group.push_back(l);
      }
      columns.emplace_back(to_string(v), aggregate_strategy_usage(group));
    }
    std::string name = decision;
    for (char& c : name) c = static_cast<char>(std::tolower(c));
    std::ofstream out(out_dir / ("strategies_" + name + ".csv"));
    out << strategy_table_csv(columns);
  }

  // Pooled cooperative-vs-defecting difference across decision types.
  auto pooled = [&](ArchetypeVariant v) {
    std::vector<TaxonomyLabel> group;
    for (const TaxonomyLabel& l : store.labels()) {
      auto a = archetype_of(l);
      if (a && *a == v) group.push_back(l);
    }
    return aggregate_strategy_usage(group);
  };
  std::ofstream diff_out(out_dir / "strategy_diff.csv");
  diff_out << strategy_diff_csv(archetype_strategy_diff(
      pooled(ArchetypeVariant::INCREASINGLY_COOPERATIVE),
      pooled(ArchetypeVariant::INCREASINGLY_DEFECTING)));

  std::cout << "labels: " << store.labels().size() << " ("
            << store.path() << ")\n";
  return 0;
}

int cmd_ablate(const CommonOptions& opts) {
  if (opts.config_path.empty()) {
    std::cerr << "ablate needs --config (suite or base config)\n";
    return 1;
  }
  AblationSuite suite;
  {
    std::ifstream in(opts.config_path);
    std::ostringstream os;
    os << in.rdbuf();
    // A file with a "base" key is a suite; otherwise a base RunConfig
    // with the default variations.
    if (os.str().find("\"base\"") != std::string::npos) {
      suite = load_ablation_suite(opts.config_path);
    } else {
      suite = default_ablation_suite(load_run_config(opts.config_path));
    }
  }
  const fs::path out_dir =
      opts.out.empty() ? fs::path("ablation_out") : fs::path(opts.out);
  fs::create_directories(out_dir);

  std::ostringstream csv;
  csv << "variation,contribution_mean,contribution_pct_of_max,si_rate,"
         "free_rider_rate,avg_payoff_per_round\n";
  int rows = 0;
  for (const AblationVariation& variation : suite.variations) {
    try {
      RunConfig config = apply_variation(suite.base, variation);
      if (opts.seed) config.seed = *opts.seed;
      const int runs = opts.runs.value_or(1);
      std::vector<MetricsSummary> summaries;
      for (int i = 0; i < runs; ++i) {
        RunConfig local = config;
        local.seed = config.seed + static_cast<std::uint64_t>(i);
        RunTranscript t = run_simulation(local.engine_config(),
                                         build_roster(local, opts.mock));
        save_transcript(
            t, (out_dir / (variation.name + "_run_" +
                           std::to_string(local.seed) + ".jsonl"))
                   .string());
        summaries.push_back(run_metrics(t));
      }
      MetricsSummary s = aggregate_runs(summaries);
      const double pct =
          100.0 * s.contribution_mean /
          config.params.effective_max_contribution();
      csv << variation.name << ',' << s.contribution_mean << ',' << pct
          << ',' << s.si_rate << ',' << s.free_rider_rate << ','
          << s.avg_payoff_per_round << '\n';
      ++rows;
    } catch (const std::exception& e) {
      std::cerr << variation.name << " failed: " << e.what() << "\n";
    }
  }
  std::cout << csv.str();
  std::ofstream out(out_dir / "ablation.csv");
  out << csv.str();
  return rows > 0 ? 0 : 1;
}

std::vector<std::string> validate_transcript(const RunTranscript& t) {
  std::vector<std::string> problems;
  const GameParameters& p = t.params;
  const int n = p.group_size;
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-9; };
  for (const RoundRecord& round : t.rounds) {
    if (static_cast<int>(round.agents.size()) != n) {
      problems.push_back("round " + std::to_string(round.round_number) +
                         ": wrong agent count");
      continue;
    }
    int pools[2] = {0, 0};
    int sizes[2] = {0, 0};
    for (const AgentRoundRecord& a : round.agents) {
      const int k = a.institution == Institution::SI ? 0 : 1;
      pools[k] += a.contribution;
      ++sizes[k];
    }
    for (int i = 0; i < n; ++i) {
      const AgentRoundRecord& a = round.agents[i];
      const int k = a.institution == Institution::SI ? 0 : 1;
      const double stage1 = stage1_payoff(p, a.contribution, pools[k], sizes[k]);
      int rewards = 0, punishments = 0;
      for (const AgentRoundRecord& other : round.agents) {
        auto r = other.sanctions_given.rewards.find(i);
        if (r != other.sanctions_given.rewards.end()) rewards += r->second;
        auto q = other.sanctions_given.punishments.find(i);
        if (q != other.sanctions_given.punishments.end())
          punishments += q->second;
      }
      if (rewards != a.rewards_received || punishments != a.punishments_received)
        problems.push_back("round " + std::to_string(round.round_number) +
                           " agent " + std::to_string(i) +
                           ": received sanctions do not match given maps");
      const double stage2 =
          stage2_payoff(p, a.sanctions_given, a.rewards_received,
                        a.punishments_received, a.institution == Institution::SI);
      if (!near(stage1, a.payoff.stage1) || !near(stage2, a.payoff.stage2) ||
          !near(stage1 + stage2, a.payoff.total))
        problems.push_back("round " + std::to_string(round.round_number) +
                           " agent " + std::to_string(i) +
                           ": payoff mismatch on recomputation");
    }
    std::set<int> seen(round.permutation.begin(), round.permutation.end());
    if (static_cast<int>(seen.size()) != n || *seen.begin() != 1 ||
        *seen.rbegin() != n)
      problems.push_back("round " + std::to_string(round.round_number) +
                         ": permutation is not 1.." + std::to_string(n));
  }
  return problems;
}

int cmd_replay(const CommonOptions& opts) {
  if (opts.transcripts.empty()) {
    std::cerr << "no transcripts given\n";
    return 1;
  }
  int failures = 0;
  std::cout << metrics_csv_header() << '\n';
  for (const std::string& path : opts.transcripts) {
    try {
      RunTranscript t = load_transcript(path);
      std::vector<std::string> problems = validate_transcript(t);
      for (const std::string& problem : problems)
        std::cerr << path << ": " << problem << "\n";
      failures += static_cast<int>(problems.size());
      std::cout << metrics_csv_row(fs::path(path).stem().string(),
                                   run_metrics(t))
                << '\n';
    } catch (const std::exception& e) {
      std::cerr << path << ": " << e.what() << "\n";
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Public goods game simulator with institutional choice"};
  app.require_subcommand(1);
  CommonOptions opts;

  auto add_common = [&](CLI::App* sub, bool with_transcripts) {
    sub->add_option("--config", opts.config_path, "JSON configuration file");
    sub->add_option("--seed", opts.seed, "base seed override");
    sub->add_option("--runs", opts.runs, "number of independent runs");
    sub->add_option("--jobs", opts.jobs, "parallel run cap");
    sub->add_flag("--mock", opts.mock, "offline mock backends only");
    sub->add_option("--out", opts.out, "output file or directory");
    if (with_transcripts)
      sub->add_option("transcripts", opts.transcripts, "transcript files");
  };

  CLI::App* run = app.add_subcommand("run", "execute simulations");
  add_common(run, false);
  CLI::App* metrics =
      app.add_subcommand("metrics", "summarize existing transcripts");
  add_common(metrics, true);
  CLI::App* classify =
      app.add_subcommand("classify", "label reasoning statements");
  add_common(classify, true);
  CLI::App* ablate =
      app.add_subcommand("ablate", "run a parameter-variation suite");
  add_common(ablate, false);
  CLI::App* replay =
      app.add_subcommand("replay", "re-derive metrics and validate invariants");
  add_common(replay, true);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(opts);
    if (metrics->parsed()) return cmd_metrics(opts);
    if (classify->parsed()) return cmd_classify(opts);
    if (ablate->parsed()) return cmd_ablate(opts);
    if (replay->parsed()) return cmd_replay(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
