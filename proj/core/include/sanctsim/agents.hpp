#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "sanctsim/view.hpp"

namespace sanctsim {

/// Bookkeeping attached to every decision. Scripted policies leave the
/// defaults; the LLM pipeline fills in attempts and raw model output.
struct DecisionMeta {
  int attempts = 1;
  bool fallback_used = false;
  bool lenient_parse = false;
  std::string raw_text;
};

struct InstitutionDecision {
  Institution institution = Institution::SFI;
  std::string reasoning;
  DecisionMeta meta;
};

struct ContributionDecision {
  int contribution = 0;
  std::string reasoning;
  DecisionMeta meta;
};

/// Allocation keyed by the display numbers visible to the agent; the
/// engine translates back to true agent indices.
struct SanctionDecision {
  SanctionAllocation allocation;
  std::string reasoning;
  DecisionMeta meta;
};

/// Thrown by a policy when it cannot produce a decision and fallback
/// substitution is disabled. The engine aborts the run on it.
struct PolicyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DecisionPolicy {
 public:
  virtual ~DecisionPolicy() = default;
  virtual InstitutionDecision choose_institution(const AgentView& view) = 0;
  virtual ContributionDecision choose_contribution(const AgentView& view) = 0;
  virtual SanctionDecision choose_sanctions(const AgentView& view) = 0;
  virtual std::string name() const = 0;
};

using PolicyPtr = std::shared_ptr<DecisionPolicy>;

/// Always SI, always max contribution, never sanctions.
PolicyPtr make_full_cooperator();

/// Always SFI, zero contribution, no sanctions (the Nash profile).
PolicyPtr make_free_rider();

/// Constant institution and contribution, no sanctions.
PolicyPtr make_fixed_contributor(int contribution, Institution institution);

/// Round 1 contributes `initial`; afterwards matches the rounded mean of
/// last round's contributions in its institution, and picks the
/// institution with the higher last-round mean total payoff (ties stay).
PolicyPtr make_conditional_cooperator(int initial);

/// Always SI, contributes max, and splits the sanction budget between
/// punishing free riders and rewarding high contributors.
PolicyPtr make_norm_enforcer(double reward_budget_share,
                             double punish_budget_share);

/// Builds a scripted policy by name ("full_cooperator", "free_rider",
/// "fixed_contributor", "conditional_cooperator", "norm_enforcer").
/// Throws std::invalid_argument on unknown names.
PolicyPtr make_scripted_policy(const std::string& name, double param_a = 0,
                               double param_b = 0,
                               Institution institution = Institution::SI);

}  // namespace sanctsim
