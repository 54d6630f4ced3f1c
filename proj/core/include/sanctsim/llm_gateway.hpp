#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sanctsim/agents.hpp"
#include "sanctsim/prompt_kit.hpp"

namespace sanctsim {

enum class GatewayError {
  AUTH,
  TIMEOUT,
  RATE_LIMITED,
  PROVIDER,
  MALFORMED_JSON,
  SCHEMA_VIOLATION,
  EMPTY_OUTPUT,
};

std::string to_string(GatewayError e);

struct ProviderConfig {
  std::string base_url;  // scheme://host[:port]
  std::string endpoint_path = "/v1/chat/completions";
  std::string model_id;
  std::string api_key_env;
  std::optional<double> temperature;  // absent for reasoning models
  std::optional<std::string> reasoning_effort;  // low | medium | high
  int request_timeout_s = 120;
  int max_retries = 3;
  int initial_backoff_ms = 250;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct Completion {
  std::string text;
  Usage usage;
  int attempts = 1;  // HTTP attempts, including backoff retries
};

struct CompletionResult {
  std::optional<Completion> completion;
  std::optional<GatewayError> error;
  std::string message;
  bool ok() const { return completion.has_value(); }
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual CompletionResult complete(const std::string& prompt) = 0;
  virtual std::string describe() const = 0;
};

using BackendPtr = std::shared_ptr<ChatBackend>;

/// OpenAI-style chat-completion client over HTTP. Credentials come from
/// the environment variable named in the config and never appear in
/// transcripts or logs.
BackendPtr make_http_backend(ProviderConfig config);

/// Replays canned responses in order; cycles when exhausted if `cycle`.
BackendPtr make_scripted_backend(std::vector<std::string> responses,
                                 bool cycle = true);

/// Loads a scripted backend from a JSON file: either a plain array of
/// strings or {"responses": [...], "cycle": bool}.
BackendPtr make_scripted_backend_from_file(const std::string& path);

/// Deterministic keyword-rule classifier that answers classification
/// prompts with valid taxonomy JSON; used to exercise the analysis
/// pipeline without a provider.
BackendPtr make_keyword_classifier_backend();

/// Offline stand-in for a decision model: detects the requested schema
/// from the prompt's JSON contract and answers with a fixed choice.
BackendPtr make_mock_decision_backend(std::string institution = "SI",
                                      int contribution = 10);

/// The typed result of parsing one model response.
struct ParsedDecision {
  PromptSchema schema = PromptSchema::INSTITUTION;
  std::string reasoning;
  Institution institution = Institution::SFI;  // INSTITUTION
  int contribution = 0;                        // CONTRIBUTION
  SanctionAllocation allocation;  // SANCTION, keyed by display number
  double confidence = 0.0;               // CLASSIFICATION
  std::string justification_type;        // CLASSIFICATION
  std::string classifier_rationale;      // CLASSIFICATION
  bool lenient_enum = false;
};

struct ExtractResult {
  std::optional<ParsedDecision> decision;
  std::optional<GatewayError> error;
  std::string message;
  bool ok() const { return decision.has_value(); }
};

/// Locates the first JSON object in the text (models may wrap it in
/// prose or code fences) and validates it against the expected schema.
ExtractResult extract_decision(PromptSchema schema,
                               const std::string& raw_text);

/// Returns an error description when the parsed decision violates game
/// rules, or nullopt when acceptable.
using GameValidator =
    std::function<std::optional<std::string>(const ParsedDecision&)>;

struct DecisionEnvelope {
  std::string raw_text;
  ParsedDecision parsed;
  int attempts = 0;
  bool fallback_used = false;
  Usage usage;
  std::string last_error;
};

/// Render -> call -> parse -> validate, re-prompting with a one-line
/// error description on failure. After exhausting max_retries the
/// configured fallback is returned flagged, or PolicyFailure is thrown
/// when fallback is disabled.
DecisionEnvelope decide_with_retries(ChatBackend& backend,
                                     const RenderedPrompt& prompt,
                                     const GameValidator& validator,
                                     const ParsedDecision& fallback,
                                     int max_retries, bool fallback_enabled);

/// DecisionPolicy backed by a chat backend through the prompt kit.
PolicyPtr make_llm_policy(BackendPtr backend,
                          std::shared_ptr<const PromptKit> prompts,
                          PromptVariant variant, int max_retries,
                          bool fallback_enabled, std::string name);

}  // namespace sanctsim
