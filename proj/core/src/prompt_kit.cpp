#include "sanctsim/prompt_kit.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef SANCTSIM_DEFAULT_TEMPLATE_DIR
#define SANCTSIM_DEFAULT_TEMPLATE_DIR "templates"
#endif

namespace sanctsim {

namespace {

std::string two_decimals(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string trimmed_number(double value) {
  std::ostringstream os;
  os << value;
  return os.str();
}

std::string institution_label(Institution inst) {
  return inst == Institution::SI ? "Sanctioning Institution (SI)"
                                 : "Sanction-Free Institution (SFI)";
}

bool is_placeholder_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_placeholder_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// Finds the next `{identifier}` token at or after `pos`; returns npos if
// none. `name` receives the identifier.
std::size_t find_placeholder(const std::string& text, std::size_t pos,
                             std::string* name, std::size_t* end) {
  while ((pos = text.find('{', pos)) != std::string::npos) {
    std::size_t i = pos + 1;
    if (i < text.size() && is_placeholder_start(text[i])) {
      std::size_t j = i;
      while (j < text.size() && is_placeholder_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}') {
        *name = text.substr(i, j - i);
        *end = j + 1;
        return pos;
      }
    }
    ++pos;
  }
  return std::string::npos;
}

}  // namespace

std::string to_string(PromptVariant variant) {
  return variant == PromptVariant::STANDARD ? "STANDARD" : "NARRATIVE";
}

std::optional<PromptVariant> prompt_variant_from_string(const std::string& s) {
  if (s == "STANDARD") return PromptVariant::STANDARD;
  if (s == "NARRATIVE") return PromptVariant::NARRATIVE;
  return std::nullopt;
}

std::string substitute_placeholders(
    const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::string name;
    std::size_t end = 0;
    std::size_t found = find_placeholder(tmpl, pos, &name, &end);
    if (found == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    out.append(tmpl, pos, found - pos);
    auto it = values.find(name);
    if (it != values.end()) {
      out += it->second;
    } else {
      out.append(tmpl, found, end - found);  // leave unknown tokens intact
    }
    pos = end;
  }
  return out;
}

bool has_unresolved_placeholder(const std::string& text) {
  std::string name;
  std::size_t end = 0;
  return find_placeholder(text, 0, &name, &end) != std::string::npos;
}

std::string format_past_actions(const std::vector<OwnHistoryEntry>& history,
                                const GameParameters& params) {
  if (history.empty()) {
    return "You have no past actions yet; this is your first round.\n";
  }
  std::ostringstream os;
  for (const OwnHistoryEntry& e : history) {
    os << "Round " << e.round << ": Institution: " << to_string(e.institution)
       << ",\n";
    os << "institution_reasoning: '" << e.institution_reasoning << "',\n";
    os << "Contribution: " << e.contribution << ", contribution_reasoning: '"
       << e.contribution_reasoning << "',\n";
    os << "Stage 1 Payoff: " << two_decimals(e.stage1)
       << ", Stage 2 Payoff: " << two_decimals(e.stage2)
       << ", Total Round Payoff: " << two_decimals(e.total) << ",\n";
    os << "Received " << e.punishments_received
       << " punishment token(s) (total effect: -"
       << e.punishments_received * params.punishment_effect << " tokens),\n";
    os << "Received " << e.rewards_received
       << " reward token(s) (total effect: +"
       << e.rewards_received * params.reward_effect << " tokens),\n";
    os << "Assigned Punishments: " << e.punishments_assigned
       << ", Assigned Rewards: " << e.rewards_assigned << ",\n";
    os << "Punishment Reasoning: '" << e.sanction_reasoning << "',\n";
    os << "Rank: " << e.rank << "\n\n";
  }
  return os.str();
}

std::string format_anonymous_data(
    const std::vector<PublicHistoryRound>& history) {
  if (history.empty()) {
    return "No anonymous data available yet; this is the first round.\n";
  }
  std::ostringstream os;
  for (const PublicHistoryRound& round : history) {
    os << "Round " << round.round << ":\n\n";
    for (const PublicHistoryRow& row : round.rows) {
      os << "Agent " << row.display_number
         << ": Institution: " << to_string(row.institution) << ",\n";
      os << "Contributed " << row.contribution << " tokens,\n";
      os << "Assigned Punishments: " << row.assigned_punishments
         << ", Assigned Rewards: " << row.assigned_rewards << ",\n";
      os << "Received Punishments: " << row.received_punishments
         << ", Received Rewards: " << row.received_rewards << ",\n";
      os << "Stage 1 Payoff: " << two_decimals(row.stage1)
         << ", Stage 2 Payoff: " << two_decimals(row.stage2) << ",\n";
      os << "Total Round Payoff: " << two_decimals(row.total) << "\n\n";
    }
  }
  return os.str();
}

PromptKit::PromptKit(std::string template_dir) : dir_(std::move(template_dir)) {}

std::string PromptKit::default_template_dir() {
  if (const char* env = std::getenv("SANCTSIM_TEMPLATE_DIR")) return env;
  return SANCTSIM_DEFAULT_TEMPLATE_DIR;
}

std::string PromptKit::load_template(const std::string& relative_path) const {
  const std::string path = dir_ + "/" + relative_path;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open prompt template: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RenderedPrompt PromptKit::render_decision_prompt(const AgentView& view,
                                                 PromptVariant variant) const {
  const GameParameters& p = view.params;
  const char* phase_file = nullptr;
  PromptSchema schema = PromptSchema::INSTITUTION;
  switch (view.phase) {
    case Phase::INSTITUTION:
      phase_file = "institution.txt";
      schema = PromptSchema::INSTITUTION;
      break;
    case Phase::CONTRIBUTION:
      phase_file = "contribution.txt";
      schema = PromptSchema::CONTRIBUTION;
      break;
    case Phase::SANCTION:
      phase_file = "sanction.txt";
      schema = PromptSchema::SANCTION;
      break;
  }
  const std::string subdir =
      variant == PromptVariant::STANDARD ? "standard" : "narrative";
  std::string tmpl = load_template(subdir + "/" + phase_file);

  std::map<std::string, std::string> values;
  values["round_number"] = std::to_string(view.round_number);
  values["initial_tokens"] = std::to_string(p.endowment_stage1);
  values["endowment_stage1"] = std::to_string(p.endowment_stage1);
  values["sanction_endowment"] = std::to_string(p.sanction_endowment);
  values["public_good_multiplier"] = trimmed_number(p.multiplier);
  values["reward_cost"] = std::to_string(p.reward_cost);
  values["reward_effect"] = std::to_string(p.reward_effect);
  values["punishment_cost"] = std::to_string(p.punishment_cost);
  values["punishment_effect"] = std::to_string(p.punishment_effect);
  values["min_contribution"] = std::to_string(p.min_contribution);
  values["max_contribution"] = std::to_string(p.effective_max_contribution());
  values["display_window"] = std::to_string(p.display_window);
  values["cumulative_payoff"] = two_decimals(view.cumulative_payoff);
  values["past_actions"] = format_past_actions(view.own_history, p);
  values["anonymous_data"] = format_anonymous_data(view.public_history);

  if (view.phase != Phase::INSTITUTION) {
    if (!view.current_institution)
      throw std::runtime_error(
          "view lacks current_institution for this phase");
    values["institution"] = institution_label(*view.current_institution);
  }
  if (view.phase == Phase::SANCTION) {
    std::ostringstream os;
    if (view.current_peer_contributions.empty()) {
      os << "No other agents are in your institution this round.\n";
    } else {
      for (const auto& [display, contribution] :
           view.current_peer_contributions) {
        os << "Agent " << display << ": " << contribution << " tokens\n";
      }
    }
    values["contributions_str"] = os.str();
  }

  // Check coverage against the template itself; substituted content
  // blocks may legitimately contain brace tokens of their own.
  std::size_t pos = 0;
  std::string name;
  std::size_t end = 0;
  while ((pos = find_placeholder(tmpl, pos, &name, &end)) !=
         std::string::npos) {
    if (!values.contains(name))
      throw std::runtime_error("unresolved prompt placeholder: {" + name + "}");
    pos = end;
  }

  RenderedPrompt prompt;
  prompt.text = substitute_placeholders(tmpl, values);
  prompt.expected_schema = schema;
  prompt.placeholders_resolved = true;
  return prompt;
}

RenderedPrompt PromptKit::render_classification_prompt(
    const std::string& reasoning_text) const {
  if (reasoning_text.empty())
    throw std::invalid_argument("reasoning text must be non-empty");
  std::string tmpl = load_template("classification.txt");

  // Escape double quotes so the triple-quote delimiters stay unambiguous.
  std::string escaped;
  escaped.reserve(reasoning_text.size());
  for (char c : reasoning_text) {
    if (c == '"') escaped += "\\\"";
    else escaped += c;
  }

  std::size_t pos = 0;
  std::string name;
  std::size_t end = 0;
  while ((pos = find_placeholder(tmpl, pos, &name, &end)) !=
         std::string::npos) {
    if (name != "reasoning_text")
      throw std::runtime_error("unresolved placeholder in classification prompt");
    pos = end;
  }

  RenderedPrompt prompt;
  prompt.text = substitute_placeholders(tmpl, {{"reasoning_text", escaped}});
  prompt.expected_schema = PromptSchema::CLASSIFICATION;
  prompt.placeholders_resolved = true;
  return prompt;
}

}  // namespace sanctsim
