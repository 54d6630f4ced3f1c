#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sanctsim/analysis.hpp"
#include "sanctsim/engine.hpp"
#include "sanctsim/llm_gateway.hpp"

namespace sanctsim {

inline constexpr const char* kTranscriptSchema = "sanctsim-transcript/1";

/// One roster entry: a scripted policy or an LLM-backed agent.
struct AgentSpec {
  std::string kind = "scripted";  // scripted | llm
  std::string name;               // display name; defaults to the policy name
  // Scripted agents.
  std::string policy;  // full_cooperator | free_rider | fixed_contributor |
                       // conditional_cooperator | norm_enforcer
  double param_a = 0.0;
  double param_b = 0.0;
  std::string institution = "SI";  // fixed_contributor only
  // LLM agents.
  ProviderConfig provider;
  std::string mock_script;  // optional canned-response file for --mock
};

/// Strictly-parsed run configuration; unknown keys are rejected.
struct RunConfig {
  GameParameters params;
  std::vector<AgentSpec> roster;
  std::string prompt_variant = "STANDARD";
  std::uint64_t seed = 0;
  int runs = 1;
  int jobs = 1;
  bool fallback_enabled = true;
  std::string rank_scope = "global";
  int max_retries = 3;
  std::string out_dir = "out";
  std::string template_dir;  // empty -> default lookup

  EngineConfig engine_config() const;
  void validate() const;
};

RunConfig parse_run_config_text(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_text(const RunConfig& config);

/// Builds policies for the roster. With `mock` set, LLM entries use the
/// canned-response file when given, otherwise the deterministic mock
/// decision backend; no network access happens.
std::vector<PolicyPtr> build_roster(const RunConfig& config, bool mock);

// ------------------------------------------------------------- transcripts

/// JSON-lines serialization: a header line (config, seed, schema
/// version), one line per round, and a final abort line for partial
/// transcripts. Byte-deterministic for identical transcripts.
std::string transcript_to_jsonl(const RunTranscript& transcript);
RunTranscript transcript_from_jsonl(const std::string& text);

void save_transcript(const RunTranscript& transcript, const std::string& path);
RunTranscript load_transcript(const std::string& path);

bool transcript_equal(const RunTranscript& a, const RunTranscript& b);

// ------------------------------------------------------------- label store

/// Append-only JSON-lines store of taxonomy labels, idempotent by the
/// (model, run, round, agent, decision_type) provenance key.
class LabelStore {
 public:
  explicit LabelStore(std::string path);

  bool contains(const std::string& model, int run, int round, int agent,
                const std::string& decision_type) const;
  /// Returns false (and writes nothing) when the key is already present.
  bool append(const TaxonomyLabel& label);

  const std::vector<TaxonomyLabel>& labels() const { return labels_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<TaxonomyLabel> labels_;
  std::set<std::string> keys_;
};

// -------------------------------------------------------------- ablations

struct AblationVariation {
  std::string name;
  std::optional<double> multiplier;
  std::optional<int> punishment_cost;
  std::optional<int> punishment_effect;
  std::optional<int> endowment;
  std::optional<std::string> prompt_variant;
};

struct AblationSuite {
  RunConfig base;
  std::vector<AblationVariation> variations;
};

/// The seven standard parameter variations (baseline, multiplier 1.2 and
/// 2.5, punishment (1,1) and (3,3), endowment 10 and 40).
AblationSuite default_ablation_suite(RunConfig base);

/// Loads {"base": <RunConfig>, "variations": [...]}; an absent
/// variations key selects the default suite.
AblationSuite load_ablation_suite(const std::string& path);

RunConfig apply_variation(const RunConfig& base,
                          const AblationVariation& variation);

}  // namespace sanctsim
