#include "sanctsim/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace sanctsim {

using nlohmann::json;

std::string to_string(GatewayError e) {
  switch (e) {
    case GatewayError::AUTH: return "AUTH";
    case GatewayError::TIMEOUT: return "TIMEOUT";
    case GatewayError::RATE_LIMITED: return "RATE_LIMITED";
    case GatewayError::PROVIDER: return "PROVIDER";
    case GatewayError::MALFORMED_JSON: return "MALFORMED_JSON";
    case GatewayError::SCHEMA_VIOLATION: return "SCHEMA_VIOLATION";
    case GatewayError::EMPTY_OUTPUT: return "EMPTY_OUTPUT";
  }
  return "UNKNOWN";
}

namespace {

class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(ProviderConfig config) : config_(std::move(config)) {}

  CompletionResult complete(const std::string& prompt) override {
    const char* key = nullptr;
    if (!config_.api_key_env.empty()) {
      key = std::getenv(config_.api_key_env.c_str());
      if (!key || !*key) {
        return {std::nullopt, GatewayError::AUTH,
                "credential environment variable " + config_.api_key_env +
                    " is not set"};
      }
    }

    json body;
    body["model"] = config_.model_id;
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    if (config_.temperature) body["temperature"] = *config_.temperature;
    if (config_.reasoning_effort)
      body["reasoning_effort"] = *config_.reasoning_effort;
    const std::string payload = body.dump();

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.request_timeout_s, 0);
    client.set_read_timeout(config_.request_timeout_s, 0);

    httplib::Headers headers;
    if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

    int attempts = 0;
    std::optional<GatewayError> last_error;
    std::string last_message;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      ++attempts;
      auto start = std::chrono::steady_clock::now();
      httplib::Result res =
          client.Post(config_.endpoint_path, headers, payload,
                      "application/json");
      auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      if (!res) {
        const bool timeout = res.error() == httplib::Error::ConnectionTimeout ||
                             res.error() == httplib::Error::Read;
        last_error =
            timeout ? GatewayError::TIMEOUT : GatewayError::PROVIDER;
        last_message = "transport error: " + httplib::to_string(res.error());
      } else if (res->status == 429 || res->status >= 500) {
        last_error = res->status == 429 ? GatewayError::RATE_LIMITED
                                        : GatewayError::PROVIDER;
        last_message = "HTTP " + std::to_string(res->status);
      } else if (res->status == 401 || res->status == 403) {
        return {std::nullopt, GatewayError::AUTH,
                "HTTP " + std::to_string(res->status)};
      } else if (res->status >= 400) {
        return {std::nullopt, GatewayError::PROVIDER,
                "HTTP " + std::to_string(res->status) + ": " + res->body};
      } else {
        try {
          json reply = json::parse(res->body);
          Completion completion;
          completion.text =
              reply.at("choices").at(0).at("message").at("content")
                  .get<std::string>();
          if (reply.contains("usage")) {
            completion.usage.prompt_tokens =
                reply["usage"].value("prompt_tokens", 0L);
            completion.usage.completion_tokens =
                reply["usage"].value("completion_tokens", 0L);
          }
          completion.attempts = attempts;
          std::fprintf(stderr,
                       "[gateway] %s %lldms prompt=%ld completion=%ld\n",
                       config_.model_id.c_str(),
                       static_cast<long long>(latency.count()),
                       completion.usage.prompt_tokens,
                       completion.usage.completion_tokens);
          return {completion, std::nullopt, ""};
        } catch (const json::exception& e) {
          return {std::nullopt, GatewayError::PROVIDER,
                  std::string("unexpected response shape: ") + e.what()};
        }
      }
      if (attempt < config_.max_retries) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            config_.initial_backoff_ms * (1LL << attempt)));
      }
    }
    return {std::nullopt, last_error, last_message + " (after " +
                                          std::to_string(attempts) +
                                          " attempts)"};
  }

  std::string describe() const override {
    return "http:" + config_.base_url + " model=" + config_.model_id;
  }

 private:
  ProviderConfig config_;
};

class ScriptedBackend : public ChatBackend {
 public:
  ScriptedBackend(std::vector<std::string> responses, bool cycle)
      : responses_(std::move(responses)), cycle_(cycle) {}

  CompletionResult complete(const std::string&) override {
    std::lock_guard<std::mutex> lock(mutex_);
    if (responses_.empty())
      return {std::nullopt, GatewayError::EMPTY_OUTPUT, "no scripted responses"};
    if (next_ >= responses_.size()) {
      if (!cycle_)
        return {std::nullopt, GatewayError::PROVIDER,
                "scripted responses exhausted"};
      next_ = next_ % responses_.size();
    }
    Completion completion;
    completion.text = responses_[next_++];
    return {completion, std::nullopt, ""};
  }

  std::string describe() const override { return "scripted"; }

 private:
  std::vector<std::string> responses_;
  bool cycle_;
  std::size_t next_ = 0;
  std::mutex mutex_;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

/// Answers classification prompts by keyword lookup over the quoted
/// reasoning text. Purely deterministic.
class KeywordClassifierBackend : public ChatBackend {
 public:
  CompletionResult complete(const std::string& prompt) override {
    std::string text;
    const std::string delim = "\"\"\"";
    auto start = prompt.find(delim);
    if (start != std::string::npos) {
      auto end = prompt.rfind(delim);
      if (end > start) text = prompt.substr(start + 3, end - start - 3);
    }
    const std::string haystack = lower(text);
    std::vector<std::string> categories;
    auto match = [&](std::initializer_list<const char*> needles,
                     const char* category) {
      for (const char* needle : needles) {
        if (haystack.find(needle) != std::string::npos) {
          categories.emplace_back(category);
          return;
        }
      }
    };
    match({"control"}, "Control based");
    match({"cooperat"}, "Cooperative argument");
    match({"retaliat", "avoid punishment", "fear of punishment"},
          "Retaliation avoidance / Punishment aversion");
    match({"simple", "complex"}, "Complexity aversion");
    match({"enough as it is", "satisfied with", "complacen"},
          "Payoff complacency");
    match({"maximiz", "optimiz"}, "Payoff maximization");
    match({"reputation"}, "Reputation concerns");
    match({"risk", "volatil", "certainty"}, "Risk aversion");
    match({"moral", "fair", "ethic"}, "Moral considerations");
    match({"status quo", "inertia", "stick with"},
          "Status quo bias or inertia");
    match({"experiment", "learn"}, "Learning and experimentation");
    match({"norm", "conform"}, "Social norms and conformity");
    match({"frustrat", "hope", "distrust", "rebellious"},
          "Psychological factors");
    match({"nash", "equilibrium"}, "Nash equilibrium strategy");
    match({"free-rid", "free rid", "exploit"}, "Free-Riding / Exploitation");

    std::string joined;
    if (categories.empty()) {
      joined = "Other";
    } else {
      for (std::size_t i = 0; i < categories.size(); ++i) {
        if (i) joined += ", ";
        joined += categories[i];
      }
    }
    json reply = {
        {"Reasoning_behind_classification", "keyword-rule classification"},
        {"Confidence", 0.9},
        {"justification_type", joined}};
    Completion completion;
    completion.text = reply.dump();
    return {completion, std::nullopt, ""};
  }

  std::string describe() const override { return "keyword-classifier"; }
};

/// Detects the decision schema from the prompt's JSON response contract
/// and answers deterministically.
class MockDecisionBackend : public ChatBackend {
 public:
  MockDecisionBackend(std::string institution, int contribution)
      : institution_(std::move(institution)), contribution_(contribution) {}

  CompletionResult complete(const std::string& prompt) override {
    json reply;
    reply["reasoning"] = "mock decision";
    if (prompt.find("institution_choice") != std::string::npos) {
      reply["institution_choice"] = institution_;
    } else if (prompt.find("\"punishments\"") != std::string::npos) {
      reply["punishments"] = json::object();
      reply["rewards"] = json::object();
    } else {
      reply["contribution"] = contribution_;
    }
    Completion completion;
    completion.text = reply.dump();
    return {completion, std::nullopt, ""};
  }

  std::string describe() const override { return "mock-decision"; }

 private:
  std::string institution_;
  int contribution_;
};

}  // namespace

BackendPtr make_mock_decision_backend(std::string institution,
                                      int contribution) {
  return std::make_shared<MockDecisionBackend>(std::move(institution),
                                               contribution);
}

BackendPtr make_http_backend(ProviderConfig config) {
  return std::make_shared<HttpBackend>(std::move(config));
}

BackendPtr make_scripted_backend(std::vector<std::string> responses,
                                 bool cycle) {
  return std::make_shared<ScriptedBackend>(std::move(responses), cycle);
}

BackendPtr make_scripted_backend_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock script: " + path);
  json doc = json::parse(in);
  std::vector<std::string> responses;
  bool cycle = true;
  if (doc.is_array()) {
    responses = doc.get<std::vector<std::string>>();
  } else {
    responses = doc.at("responses").get<std::vector<std::string>>();
    cycle = doc.value("cycle", true);
  }
  return make_scripted_backend(std::move(responses), cycle);
}

BackendPtr make_keyword_classifier_backend() {
  return std::make_shared<KeywordClassifierBackend>();
}

namespace {

// Returns the first parseable JSON object embedded in the text, or
// nullopt. Handles prose and code fences by scanning for balanced braces
// outside string literals.
std::optional<json> first_json_object(const std::string& text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{') continue;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          try {
            return json::parse(text.substr(start, i - start + 1));
          } catch (const json::exception&) {
            break;  // keep scanning from the next brace
          }
        }
      }
    }
  }
  return std::nullopt;
}

ExtractResult schema_violation(const std::string& message) {
  return {std::nullopt, GatewayError::SCHEMA_VIOLATION, message};
}

std::optional<int> as_integer(const json& value) {
  if (value.is_number_integer()) return value.get<int>();
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (std::floor(d) == d) return static_cast<int>(d);
  }
  return std::nullopt;
}

ExtractResult parse_sanction_map(const json& obj, const char* field,
                                 std::map<int, int>& out) {
  if (!obj.contains(field)) return {ParsedDecision{}, std::nullopt, ""};
  if (!obj[field].is_object())
    return schema_violation(std::string(field) + " must be a JSON object");
  for (const auto& [key, value] : obj[field].items()) {
    int target = 0;
    try {
      std::size_t consumed = 0;
      target = std::stoi(key, &consumed);
      if (consumed != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      return schema_violation(std::string(field) + " key '" + key +
                              "' is not a quoted integer");
    }
    auto tokens = as_integer(value);
    if (!tokens)
      return schema_violation(std::string(field) + "[" + key +
                              "] is not an integer token count");
    if (*tokens < 0)
      return schema_violation(std::string(field) + "[" + key +
                              "] is negative");
    if (*tokens > 0) out[target] = *tokens;
  }
  return {ParsedDecision{}, std::nullopt, ""};
}

}  // namespace

ExtractResult extract_decision(PromptSchema schema,
                               const std::string& raw_text) {
  const bool blank = raw_text.find_first_not_of(" \t\r\n") ==
                     std::string::npos;
  if (blank) return {std::nullopt, GatewayError::EMPTY_OUTPUT, "empty output"};

  std::optional<json> obj = first_json_object(raw_text);
  if (!obj)
    return {std::nullopt, GatewayError::MALFORMED_JSON,
            "no parseable JSON object in output"};

  ParsedDecision decision;
  decision.schema = schema;
  if (obj->contains("reasoning") && (*obj)["reasoning"].is_string())
    decision.reasoning = (*obj)["reasoning"].get<std::string>();

  switch (schema) {
    case PromptSchema::INSTITUTION: {
      if (!obj->contains("institution_choice") ||
          !(*obj)["institution_choice"].is_string())
        return schema_violation("missing institution_choice string");
      std::string raw = (*obj)["institution_choice"].get<std::string>();
      auto inst = institution_from_string(raw);
      if (!inst) {
        // Single lenient pass: uppercase before matching.
        std::string upper = raw;
        std::transform(upper.begin(), upper.end(), upper.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        inst = institution_from_string(upper);
        if (!inst)
          return schema_violation("institution_choice must be SI or SFI, got '" +
                                  raw + "'");
        decision.lenient_enum = true;
      }
      decision.institution = *inst;
      break;
    }
    case PromptSchema::CONTRIBUTION: {
      if (!obj->contains("contribution"))
        return schema_violation("missing contribution field");
      auto amount = as_integer((*obj)["contribution"]);
      if (!amount)
        return schema_violation("contribution must be an integer");
      decision.contribution = *amount;
      break;
    }
    case PromptSchema::SANCTION: {
      ExtractResult r =
          parse_sanction_map(*obj, "punishments", decision.allocation.punishments);
      if (r.error) return r;
      r = parse_sanction_map(*obj, "rewards", decision.allocation.rewards);
      if (r.error) return r;
      break;
    }
    case PromptSchema::CLASSIFICATION: {
      if (!obj->contains("Confidence") || !(*obj)["Confidence"].is_number())
        return schema_violation("missing numeric Confidence");
      decision.confidence = (*obj)["Confidence"].get<double>();
      if (decision.confidence < 0.0 || decision.confidence > 1.0)
        return schema_violation("Confidence must be within [0, 1]");
      if (!obj->contains("justification_type") ||
          !(*obj)["justification_type"].is_string())
        return schema_violation("missing justification_type string");
      decision.justification_type =
          (*obj)["justification_type"].get<std::string>();
      if (obj->contains("Reasoning_behind_classification") &&
          (*obj)["Reasoning_behind_classification"].is_string())
        decision.classifier_rationale =
            (*obj)["Reasoning_behind_classification"].get<std::string>();
      break;
    }
  }
  return {decision, std::nullopt, ""};
}

DecisionEnvelope decide_with_retries(ChatBackend& backend,
                                     const RenderedPrompt& prompt,
                                     const GameValidator& validator,
                                     const ParsedDecision& fallback,
                                     int max_retries, bool fallback_enabled) {
  DecisionEnvelope envelope;
  std::string current_prompt = prompt.text;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    envelope.attempts = attempt + 1;
    CompletionResult result = backend.complete(current_prompt);
    if (!result.ok()) {
      envelope.last_error =
          to_string(*result.error) + ": " + result.message;
      // Provider-level failures are not fixable by re-prompting with
      // feedback; stop early unless transient handling already retried.
      if (*result.error == GatewayError::AUTH) break;
      continue;
    }
    envelope.raw_text = result.completion->text;
    envelope.usage = result.completion->usage;

    ExtractResult extracted =
        extract_decision(prompt.expected_schema, result.completion->text);
    std::optional<std::string> problem;
    if (!extracted.ok()) {
      problem = to_string(*extracted.error) + ": " + extracted.message;
    } else if (validator) {
      problem = validator(*extracted.decision);
    }
    if (!problem) {
      envelope.parsed = *extracted.decision;
      envelope.fallback_used = false;
      return envelope;
    }
    envelope.last_error = *problem;
    current_prompt = prompt.text +
                     "\n\nYour previous response was invalid: " + *problem +
                     "\nRespond again, strictly in the required JSON format.";
  }
  if (!fallback_enabled) {
    throw PolicyFailure("decision failed after " +
                        std::to_string(envelope.attempts) +
                        " attempts: " + envelope.last_error);
  }
  envelope.parsed = fallback;
  envelope.fallback_used = true;
  return envelope;
}

namespace {

class LlmPolicy : public DecisionPolicy {
 public:
  LlmPolicy(BackendPtr backend, std::shared_ptr<const PromptKit> prompts,
            PromptVariant variant, int max_retries, bool fallback_enabled,
            std::string name)
      : backend_(std::move(backend)),
        prompts_(std::move(prompts)),
        variant_(variant),
        max_retries_(max_retries),
        fallback_enabled_(fallback_enabled),
        name_(std::move(name)) {}

  InstitutionDecision choose_institution(const AgentView& view) override {
    RenderedPrompt prompt = prompts_->render_decision_prompt(view, variant_);
    ParsedDecision fallback;
    fallback.schema = PromptSchema::INSTITUTION;
    fallback.institution = Institution::SFI;
    DecisionEnvelope envelope = decide_with_retries(
        *backend_, prompt, nullptr, fallback, max_retries_, fallback_enabled_);
    InstitutionDecision decision;
    decision.institution = envelope.parsed.institution;
    decision.reasoning = envelope.parsed.reasoning;
    decision.meta = meta_from(envelope);
    return decision;
  }

  ContributionDecision choose_contribution(const AgentView& view) override {
    RenderedPrompt prompt = prompts_->render_decision_prompt(view, variant_);
    const GameParameters& p = view.params;
    GameValidator validator =
        [&p](const ParsedDecision& d) -> std::optional<std::string> {
      if (d.contribution < p.min_contribution ||
          d.contribution > p.effective_max_contribution()) {
        return "contribution " + std::to_string(d.contribution) +
               " outside the allowed range [" +
               std::to_string(p.min_contribution) + ", " +
               std::to_string(p.effective_max_contribution()) + "]";
      }
      return std::nullopt;
    };
    ParsedDecision fallback;
    fallback.schema = PromptSchema::CONTRIBUTION;
    fallback.contribution = p.min_contribution;
    DecisionEnvelope envelope =
        decide_with_retries(*backend_, prompt, validator, fallback,
                            max_retries_, fallback_enabled_);
    ContributionDecision decision;
    decision.contribution = envelope.parsed.contribution;
    decision.reasoning = envelope.parsed.reasoning;
    decision.meta = meta_from(envelope);
    return decision;
  }

  SanctionDecision choose_sanctions(const AgentView& view) override {
    RenderedPrompt prompt = prompts_->render_decision_prompt(view, variant_);
    const GameParameters& p = view.params;
    const auto& peers = view.current_peer_contributions;
    GameValidator validator =
        [&](const ParsedDecision& d) -> std::optional<std::string> {
      int cost = 0;
      for (const auto& [display, tokens] : d.allocation.rewards) {
        if (!peers.contains(display))
          return "reward target " + std::to_string(display) +
                 " is not another member of your institution";
        cost += tokens * p.reward_cost;
      }
      for (const auto& [display, tokens] : d.allocation.punishments) {
        if (!peers.contains(display))
          return "punishment target " + std::to_string(display) +
                 " is not another member of your institution";
        cost += tokens * p.punishment_cost;
      }
      if (cost > p.sanction_endowment)
        return "allocation costs " + std::to_string(cost) +
               " tokens, exceeding the endowment of " +
               std::to_string(p.sanction_endowment);
      return std::nullopt;
    };
    ParsedDecision fallback;
    fallback.schema = PromptSchema::SANCTION;
    DecisionEnvelope envelope =
        decide_with_retries(*backend_, prompt, validator, fallback,
                            max_retries_, fallback_enabled_);
    SanctionDecision decision;
    decision.allocation = envelope.parsed.allocation;
    decision.reasoning = envelope.parsed.reasoning;
    decision.meta = meta_from(envelope);
    return decision;
  }

  std::string name() const override { return name_; }

 private:
  static DecisionMeta meta_from(const DecisionEnvelope& envelope) {
    DecisionMeta meta;
    meta.attempts = envelope.attempts;
    meta.fallback_used = envelope.fallback_used;
    meta.lenient_parse = envelope.parsed.lenient_enum;
    meta.raw_text = envelope.raw_text;
    return meta;
  }

  BackendPtr backend_;
  std::shared_ptr<const PromptKit> prompts_;
  PromptVariant variant_;
  int max_retries_;
  bool fallback_enabled_;
  std::string name_;
};

}  // namespace

PolicyPtr make_llm_policy(BackendPtr backend,
                          std::shared_ptr<const PromptKit> prompts,
                          PromptVariant variant, int max_retries,
                          bool fallback_enabled, std::string name) {
  return std::make_shared<LlmPolicy>(std::move(backend), std::move(prompts),
                                     variant, max_retries, fallback_enabled,
                                     std::move(name));
}

}  // namespace sanctsim
