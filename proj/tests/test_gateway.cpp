#include <cstdlib>

#include "doctest.h"
#include "sanctsim/llm_gateway.hpp"

using namespace sanctsim;

TEST_CASE("extract_decision finds JSON inside prose and code fences") {
  auto fenced = extract_decision(
      PromptSchema::INSTITUTION,
      "Sure, here you go:\n```json\n{\"reasoning\": \"go with sanctions\", "
      "\"institution_choice\": \"SI\"}\n```\nDone.");
  REQUIRE(fenced.ok());
  CHECK(fenced.decision->institution == Institution::SI);
  CHECK(fenced.decision->reasoning == "go with sanctions");
  CHECK_FALSE(fenced.decision->lenient_enum);

  auto empty = extract_decision(PromptSchema::INSTITUTION, "   \n  ");
  CHECK(empty.error == GatewayError::EMPTY_OUTPUT);

  auto prose = extract_decision(PromptSchema::INSTITUTION, "I choose SI.");
  CHECK(prose.error == GatewayError::MALFORMED_JSON);
}

TEST_CASE("institution parsing is strict with one flagged lenient pass") {
  auto lower = extract_decision(
      PromptSchema::INSTITUTION,
      R"({"reasoning": "r", "institution_choice": "si"})");
  REQUIRE(lower.ok());
  CHECK(lower.decision->institution == Institution::SI);
  CHECK(lower.decision->lenient_enum);

  auto junk = extract_decision(
      PromptSchema::INSTITUTION,
      R"({"reasoning": "r", "institution_choice": "sanctioning"})");
  CHECK(junk.error == GatewayError::SCHEMA_VIOLATION);
}

TEST_CASE("contribution must be an integral number") {
  auto whole = extract_decision(PromptSchema::CONTRIBUTION,
                                R"({"reasoning": "r", "contribution": 12.0})");
  REQUIRE(whole.ok());
  CHECK(whole.decision->contribution == 12);

  auto fractional = extract_decision(
      PromptSchema::CONTRIBUTION, R"({"reasoning": "r", "contribution": 12.5})");
  CHECK(fractional.error == GatewayError::SCHEMA_VIOLATION);

  auto missing =
      extract_decision(PromptSchema::CONTRIBUTION, R"({"reasoning": "r"})");
  CHECK(missing.error == GatewayError::SCHEMA_VIOLATION);
}

TEST_CASE("sanction maps use quoted integer keys and drop zero entries") {
  auto ok = extract_decision(
      PromptSchema::SANCTION,
      R"({"reasoning": "r", "punishments": {"3": 2, "5": 0}, "rewards": {"1": 4}})");
  REQUIRE(ok.ok());
  CHECK(ok.decision->allocation.punishments ==
        std::map<int, int>{{3, 2}});
  CHECK(ok.decision->allocation.rewards == std::map<int, int>{{1, 4}});

  auto negative = extract_decision(
      PromptSchema::SANCTION, R"({"punishments": {"3": -1}, "rewards": {}})");
  CHECK(negative.error == GatewayError::SCHEMA_VIOLATION);

  auto bad_key = extract_decision(
      PromptSchema::SANCTION, R"({"punishments": {"abc": 1}, "rewards": {}})");
  CHECK(bad_key.error == GatewayError::SCHEMA_VIOLATION);
}

TEST_CASE("classification schema enforces the confidence range") {
  auto ok = extract_decision(
      PromptSchema::CLASSIFICATION,
      R"({"Reasoning_behind_classification": "x", "Confidence": 0.85,
          "justification_type": "Cooperative argument, Control based"})");
  REQUIRE(ok.ok());
  CHECK(ok.decision->confidence == doctest::Approx(0.85));
  CHECK(ok.decision->justification_type ==
        "Cooperative argument, Control based");

  auto out_of_range = extract_decision(
      PromptSchema::CLASSIFICATION,
      R"({"Confidence": 1.2, "justification_type": "Control based"})");
  CHECK(out_of_range.error == GatewayError::SCHEMA_VIOLATION);
}

TEST_CASE("scripted backend replays and cycles") {
  BackendPtr backend = make_scripted_backend({"a", "b"}, /*cycle=*/true);
  CHECK(backend->complete("").completion->text == "a");
  CHECK(backend->complete("").completion->text == "b");
  CHECK(backend->complete("").completion->text == "a");

  BackendPtr finite = make_scripted_backend({"only"}, /*cycle=*/false);
  CHECK(finite->complete("").ok());
  CHECK_FALSE(finite->complete("").ok());
}

TEST_CASE("decide_with_retries re-prompts with the error and recovers") {
  BackendPtr backend = make_scripted_backend(
      {R"({"institution_choice": "whatever"})",
       R"({"reasoning": "second try", "institution_choice": "SFI"})"},
      /*cycle=*/false);
  RenderedPrompt prompt{"choose", PromptSchema::INSTITUTION, true};
  ParsedDecision fallback;
  fallback.institution = Institution::SI;
  DecisionEnvelope envelope =
      decide_with_retries(*backend, prompt, nullptr, fallback, 3, true);
  CHECK_FALSE(envelope.fallback_used);
  CHECK(envelope.attempts == 2);
  CHECK(envelope.parsed.institution == Institution::SFI);
}

TEST_CASE("exhausted retries fall back or throw") {
  RenderedPrompt prompt{"choose", PromptSchema::INSTITUTION, true};
  ParsedDecision fallback;
  fallback.institution = Institution::SFI;

  BackendPtr garbage = make_scripted_backend({"nonsense"}, true);
  DecisionEnvelope envelope =
      decide_with_retries(*garbage, prompt, nullptr, fallback, 2, true);
  CHECK(envelope.fallback_used);
  CHECK(envelope.parsed.institution == Institution::SFI);
  CHECK(envelope.attempts == 3);

  BackendPtr garbage2 = make_scripted_backend({"nonsense"}, true);
  CHECK_THROWS_AS(
      decide_with_retries(*garbage2, prompt, nullptr, fallback, 2, false),
      PolicyFailure);
}

TEST_CASE("game validators trigger re-prompting") {
  BackendPtr backend = make_scripted_backend(
      {R"({"reasoning": "r", "contribution": 99})",
       R"({"reasoning": "r", "contribution": 10})"},
      /*cycle=*/false);
  RenderedPrompt prompt{"contribute", PromptSchema::CONTRIBUTION, true};
  GameValidator validator = [](const ParsedDecision& d)
      -> std::optional<std::string> {
    if (d.contribution > 20) return "contribution above the endowment";
    return std::nullopt;
  };
  ParsedDecision fallback;
  DecisionEnvelope envelope =
      decide_with_retries(*backend, prompt, validator, fallback, 3, true);
  CHECK(envelope.parsed.contribution == 10);
  CHECK(envelope.attempts == 2);
}

TEST_CASE("missing credential env var is an AUTH error before any I/O") {
  ProviderConfig config;
  config.base_url = "http://127.0.0.1:1";  // would fail if contacted
  config.model_id = "test";
  config.api_key_env = "SANCTSIM_DEFINITELY_UNSET_KEY";
  unsetenv("SANCTSIM_DEFINITELY_UNSET_KEY");
  BackendPtr backend = make_http_backend(config);
  CompletionResult result = backend->complete("hello");
  CHECK(result.error == GatewayError::AUTH);
  CHECK(result.message.find("SANCTSIM_DEFINITELY_UNSET_KEY") !=
        std::string::npos);
}

TEST_CASE("keyword classifier emits valid taxonomy JSON") {
  BackendPtr backend = make_keyword_classifier_backend();
  CompletionResult result = backend->complete(
      "Reasoning Text: \"\"\"I want to cooperate and maximize my payoff\"\"\"");
  REQUIRE(result.ok());
  auto parsed =
      extract_decision(PromptSchema::CLASSIFICATION, result.completion->text);
  REQUIRE(parsed.ok());
  CHECK(parsed.decision->confidence == doctest::Approx(0.9));
  CHECK(parsed.decision->justification_type.find("Cooperative argument") !=
        std::string::npos);
  CHECK(parsed.decision->justification_type.find("Payoff maximization") !=
        std::string::npos);
}

TEST_CASE("mock decision backend answers each schema") {
  BackendPtr backend = make_mock_decision_backend("SI", 14);
  auto inst = extract_decision(
      PromptSchema::INSTITUTION,
      backend->complete("respond with institution_choice").completion->text);
  REQUIRE(inst.ok());
  CHECK(inst.decision->institution == Institution::SI);
  auto sanction = extract_decision(
      PromptSchema::SANCTION,
      backend->complete("respond with \"punishments\" and \"rewards\"")
          .completion->text);
  REQUIRE(sanction.ok());
  CHECK(sanction.decision->allocation.empty());
  auto contribution = extract_decision(
      PromptSchema::CONTRIBUTION,
      backend->complete("respond with your contribution").completion->text);
  REQUIRE(contribution.ok());
  CHECK(contribution.decision->contribution == 14);
}
