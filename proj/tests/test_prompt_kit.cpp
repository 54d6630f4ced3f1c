#include <stdexcept>

#include "doctest.h"
#include "sanctsim/prompt_kit.hpp"

using namespace sanctsim;

namespace {

AgentView sample_view(Phase phase) {
  AgentView view;
  view.phase = phase;
  view.round_number = 3;
  view.cumulative_payoff = 96.5;
  if (phase != Phase::INSTITUTION) view.current_institution = Institution::SI;
  if (phase == Phase::SANCTION)
    view.current_peer_contributions = {{2, 18}, {5, 4}};

  OwnHistoryEntry own;
  own.round = 2;
  own.institution = Institution::SI;
  own.institution_reasoning = "joined the {group} for stability";
  own.contribution = 15;
  own.contribution_reasoning = "matched the average";
  own.stage1 = 21.0;
  own.stage2 = 20.0;
  own.total = 41.0;
  own.punishments_received = 1;
  own.rewards_received = 2;
  own.rank = 3;
  view.own_history.push_back(own);

  PublicHistoryRound pub;
  pub.round = 2;
  PublicHistoryRow row;
  row.display_number = 1;
  row.institution = Institution::SFI;
  row.contribution = 0;
  row.stage1 = 20.0;
  row.stage2 = 20.0;
  row.total = 40.0;
  pub.rows.push_back(row);
  view.public_history.push_back(pub);
  return view;
}

}  // namespace

TEST_CASE("placeholder substitution leaves literal JSON braces intact") {
  std::map<std::string, std::string> values{{"name", "X"}, {"round", "4"}};
  CHECK(substitute_placeholders("Hello {name}, round {round}", values) ==
        "Hello X, round 4");
  const std::string json_contract = R"({ "reasoning": "...", "n": {value} })";
  CHECK(substitute_placeholders(json_contract, {{"value", "7"}}) ==
        R"({ "reasoning": "...", "n": 7 })");
  CHECK(substitute_placeholders("{unknown}", values) == "{unknown}");
  CHECK(has_unresolved_placeholder("text {token} text"));
  CHECK_FALSE(has_unresolved_placeholder(R"({"k": 1})"));
}

TEST_CASE("own-history block carries the documented labels") {
  GameParameters p;
  std::string empty = format_past_actions({}, p);
  CHECK(empty.find("first round") != std::string::npos);

  AgentView view = sample_view(Phase::INSTITUTION);
  std::string block = format_past_actions(view.own_history, p);
  CHECK(block.find("Round 2: Institution: SI") != std::string::npos);
  CHECK(block.find("Received 1 punishment token(s) (total effect: -3 tokens)") !=
        std::string::npos);
  CHECK(block.find("Received 2 reward token(s) (total effect: +2 tokens)") !=
        std::string::npos);
  CHECK(block.find("Stage 1 Payoff: 21.00") != std::string::npos);
  CHECK(block.find("Rank: 3") != std::string::npos);
}

TEST_CASE("anonymous block shows no reasoning or rank") {
  AgentView view = sample_view(Phase::INSTITUTION);
  std::string block = format_anonymous_data(view.public_history);
  CHECK(block.find("Agent 1: Institution: SFI") != std::string::npos);
  CHECK(block.find("Reasoning") == std::string::npos);
  CHECK(block.find("Rank") == std::string::npos);
  CHECK(format_anonymous_data({}).find("No anonymous data") !=
        std::string::npos);
}

TEST_CASE("decision prompts render fully for both variants") {
  PromptKit kit;
  for (PromptVariant variant :
       {PromptVariant::STANDARD, PromptVariant::NARRATIVE}) {
    for (Phase phase :
         {Phase::INSTITUTION, Phase::CONTRIBUTION, Phase::SANCTION}) {
      AgentView view = sample_view(phase);
      RenderedPrompt prompt = kit.render_decision_prompt(view, variant);
      CHECK(prompt.placeholders_resolved);
      CHECK(prompt.text.find("{round_number}") == std::string::npos);
      CHECK(prompt.text.find("{past_actions}") == std::string::npos);
      CHECK(prompt.text.find("96.50") != std::string::npos);
    }
  }
  // The schema tracks the phase.
  CHECK(kit.render_decision_prompt(sample_view(Phase::SANCTION),
                                   PromptVariant::STANDARD)
            .expected_schema == PromptSchema::SANCTION);
}

TEST_CASE("sanction prompt lists peer contributions by display number") {
  PromptKit kit;
  RenderedPrompt prompt = kit.render_decision_prompt(
      sample_view(Phase::SANCTION), PromptVariant::STANDARD);
  CHECK(prompt.text.find("Agent 2: 18 tokens") != std::string::npos);
  CHECK(prompt.text.find("Agent 5: 4 tokens") != std::string::npos);
}

TEST_CASE("contribution prompt requires the current institution") {
  PromptKit kit;
  AgentView view = sample_view(Phase::CONTRIBUTION);
  view.current_institution.reset();
  CHECK_THROWS_AS(kit.render_decision_prompt(view, PromptVariant::STANDARD),
                  std::runtime_error);
}

TEST_CASE("classification prompt embeds and escapes the statement") {
  PromptKit kit;
  RenderedPrompt prompt =
      kit.render_classification_prompt("maximize \"my\" payoff");
  CHECK(prompt.expected_schema == PromptSchema::CLASSIFICATION);
  CHECK(prompt.text.find("maximize \\\"my\\\" payoff") != std::string::npos);
  CHECK(prompt.text.find("{reasoning_text}") == std::string::npos);
  CHECK_THROWS_AS(kit.render_classification_prompt(""), std::invalid_argument);
}

TEST_CASE("history text containing brace tokens does not break rendering") {
  PromptKit kit;
  AgentView view = sample_view(Phase::INSTITUTION);
  // institution_reasoning contains "{group}" which is not a template
  // placeholder and must be passed through untouched.
  RenderedPrompt prompt =
      kit.render_decision_prompt(view, PromptVariant::STANDARD);
  CHECK(prompt.text.find("{group}") != std::string::npos);
}
