#pragma once

#include <map>
#include <string>
#include <vector>

#include "sanctsim/view.hpp"

namespace sanctsim {

enum class PromptVariant { STANDARD, NARRATIVE };

std::string to_string(PromptVariant variant);
std::optional<PromptVariant> prompt_variant_from_string(const std::string& s);

enum class PromptSchema { INSTITUTION, CONTRIBUTION, SANCTION, CLASSIFICATION };

struct RenderedPrompt {
  std::string text;
  PromptSchema expected_schema = PromptSchema::INSTITUTION;
  bool placeholders_resolved = false;
};

/// Replaces every `{name}` token present in `values`. Placeholder names
/// are identifiers; literal JSON braces in the template are left alone.
std::string substitute_placeholders(
    const std::string& tmpl, const std::map<std::string, std::string>& values);

/// True when an unresolved `{identifier}` token remains.
bool has_unresolved_placeholder(const std::string& text);

/// The agent's own private history block.
std::string format_past_actions(const std::vector<OwnHistoryEntry>& history,
                                const GameParameters& params);

/// The anonymized all-agent data block (no reasoning, no rank).
std::string format_anonymous_data(
    const std::vector<PublicHistoryRound>& history);

/// Renders decision and classification prompts from template files laid
/// out as templates/{standard,narrative}/{institution,contribution,
/// sanction}.txt plus templates/classification.txt.
class PromptKit {
 public:
  explicit PromptKit(std::string template_dir = default_template_dir());

  RenderedPrompt render_decision_prompt(const AgentView& view,
                                        PromptVariant variant) const;
  RenderedPrompt render_classification_prompt(
      const std::string& reasoning_text) const;

  static std::string default_template_dir();

 private:
  std::string load_template(const std::string& relative_path) const;

  std::string dir_;
};

}  // namespace sanctsim
