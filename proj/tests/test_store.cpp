#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sanctsim/metrics.hpp"
#include "sanctsim/store.hpp"

using namespace sanctsim;
namespace fs = std::filesystem;

namespace {

std::string scripted_config_text() {
  return R"({
    "schema": "sanctsim-config/1",
    "seed": 17,
    "runs": 2,
    "params": {"group_size": 3, "rounds": 4},
    "roster": [
      {"kind": "scripted", "policy": "full_cooperator"},
      {"kind": "scripted", "policy": "fixed_contributor", "param_a": 5,
       "institution": "SFI"},
      {"kind": "scripted", "policy": "free_rider"}
    ]
  })";
}

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove(path);
  }
  ~TempFile() { fs::remove(path); }
};

}  // namespace

TEST_CASE("run config parses strictly") {
  RunConfig config = parse_run_config_text(scripted_config_text());
  CHECK(config.seed == 17);
  CHECK(config.runs == 2);
  CHECK(config.params.group_size == 3);
  CHECK(config.roster.size() == 3);
  CHECK(config.roster[1].policy == "fixed_contributor");

  CHECK_THROWS_WITH_AS(
      parse_run_config_text(R"({"sed": 17})"),
      doctest::Contains("unknown key 'sed'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_run_config_text(
          R"({"params": {"group_szie": 3}})"),
      doctest::Contains("group_szie"), std::runtime_error);
}

TEST_CASE("config validation catches structural mistakes") {
  // Roster size must match group size.
  CHECK_THROWS_AS(parse_run_config_text(R"({
    "params": {"group_size": 4},
    "roster": [{"kind": "scripted", "policy": "free_rider"}]
  })"),
                  std::runtime_error);
  CHECK_THROWS_AS(parse_run_config_text(R"({
    "params": {"group_size": 2, "multiplier": 5.0},
    "roster": [{"kind": "scripted", "policy": "free_rider"},
               {"kind": "scripted", "policy": "free_rider"}]
  })"),
                  std::invalid_argument);
}

TEST_CASE("config serialization round-trips") {
  RunConfig config = parse_run_config_text(scripted_config_text());
  RunConfig again = parse_run_config_text(run_config_to_text(config));
  CHECK(run_config_to_text(config) == run_config_to_text(again));
}

TEST_CASE("transcript save/load round-trips field-for-field") {
  RunConfig config = parse_run_config_text(scripted_config_text());
  RunTranscript t = run_simulation(config.engine_config(),
                                   build_roster(config, /*mock=*/false));
  REQUIRE(t.complete());

  TempFile file("sanctsim_test_transcript.jsonl");
  save_transcript(t, file.path.string());
  RunTranscript loaded = load_transcript(file.path.string());
  CHECK(transcript_equal(t, loaded));
  CHECK(loaded.seed == t.seed);
  CHECK(loaded.rounds.size() == t.rounds.size());
  CHECK(loaded.rounds[0].permutation == t.rounds[0].permutation);
  // Serialization itself is byte-deterministic.
  CHECK(transcript_to_jsonl(t) == transcript_to_jsonl(loaded));
}

TEST_CASE("partial transcripts round-trip the abort marker") {
  RunConfig config = parse_run_config_text(scripted_config_text());
  RunTranscript t = run_simulation(config.engine_config(),
                                   build_roster(config, false));
  t.abort = AbortInfo{3, "simulated failure"};
  t.rounds.resize(2);
  TempFile file("sanctsim_test_partial.jsonl");
  save_transcript(t, file.path.string());
  RunTranscript loaded = load_transcript(file.path.string());
  CHECK_FALSE(loaded.complete());
  CHECK(loaded.abort->cause == "simulated failure");
  CHECK(loaded.rounds.size() == 2);
}

TEST_CASE("label store is append-only and idempotent") {
  TempFile file("sanctsim_test_labels.jsonl");
  TaxonomyLabel label;
  label.model = "mock";
  label.run = 1;
  label.round = 2;
  label.agent = 3;
  label.decision_type = "CONTRIBUTION";
  label.categories = {"Payoff maximization"};
  label.confidence = 0.9;
  {
    LabelStore store(file.path.string());
    CHECK(store.append(label));
    CHECK_FALSE(store.append(label));  // duplicate key
    label.agent = 4;
    CHECK(store.append(label));
  }
  // Reopening resumes with zero duplicates.
  LabelStore reopened(file.path.string());
  CHECK(reopened.labels().size() == 2);
  CHECK(reopened.contains("mock", 1, 2, 3, "CONTRIBUTION"));
  label.agent = 3;
  CHECK_FALSE(reopened.append(label));
  CHECK(reopened.labels().size() == 2);
}

TEST_CASE("default ablation suite has the seven variations") {
  RunConfig base = parse_run_config_text(scripted_config_text());
  AblationSuite suite = default_ablation_suite(base);
  REQUIRE(suite.variations.size() == 7);
  CHECK(suite.variations[0].name == "baseline");

  RunConfig low = apply_variation(base, suite.variations[1]);
  CHECK(low.params.multiplier == doctest::Approx(1.2));
  RunConfig punitive = apply_variation(base, suite.variations[4]);
  CHECK(punitive.params.punishment_cost == 3);
  CHECK(punitive.params.punishment_effect == 3);
  RunConfig rich = apply_variation(base, suite.variations[6]);
  CHECK(rich.params.endowment_stage1 == 40);
  CHECK(rich.params.effective_high_contributor_threshold() == 30);
  CHECK(rich.params.free_rider_threshold == 5);
  // Only the declared key changed.
  CHECK(rich.params.multiplier == base.params.multiplier);
  CHECK(rich.seed == base.seed);
}

TEST_CASE("every default variation runs end-to-end with scripted rosters") {
  RunConfig base = parse_run_config_text(scripted_config_text());
  AblationSuite suite = default_ablation_suite(base);
  for (const AblationVariation& v : suite.variations) {
    RunConfig config = apply_variation(base, v);
    RunTranscript t = run_simulation(config.engine_config(),
                                     build_roster(config, false));
    REQUIRE(t.complete());
    MetricsSummary s = run_metrics(t);
    CHECK(s.rounds == config.params.rounds);
  }
}

TEST_CASE("mock llm roster runs offline") {
  RunConfig config = parse_run_config_text(R"({
    "seed": 5,
    "params": {"group_size": 2, "rounds": 3, "multiplier": 1.5},
    "roster": [
      {"kind": "llm", "name": "mock-model",
       "provider": {"base_url": "http://127.0.0.1:1", "model_id": "x",
                    "api_key_env": "UNSET_KEY_FOR_TEST"}},
      {"kind": "scripted", "policy": "full_cooperator"}
    ]
  })");
  RunTranscript t = run_simulation(config.engine_config(),
                                   build_roster(config, /*mock=*/true));
  REQUIRE(t.complete());
  CHECK(t.roster[0] == "mock-model");
  // Mock decision backend chooses SI and contributes 10.
  CHECK(t.rounds[0].agents[0].institution == Institution::SI);
  CHECK(t.rounds[0].agents[0].contribution == 10);
  CHECK_FALSE(t.rounds[0].agents[0].fallback_contribution);
}
