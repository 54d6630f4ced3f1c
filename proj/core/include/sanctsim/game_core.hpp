#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

namespace sanctsim {

enum class Institution { SI, SFI };

std::string to_string(Institution inst);
std::optional<Institution> institution_from_string(const std::string& s);

/// All tunable constants of the game. Defaults reproduce the standard
/// 7-agent, 15-round configuration.
struct GameParameters {
  int endowment_stage1 = 20;
  int sanction_endowment = 20;
  double multiplier = 1.6;
  int group_size = 7;
  int rounds = 15;
  int reward_cost = 1;
  int reward_effect = 1;
  int punishment_cost = 1;
  int punishment_effect = 3;  // stored positive, applied negatively
  int min_contribution = 0;
  // Unset values track the stage-1 endowment.
  std::optional<int> max_contribution;
  int display_window = 5;
  // High-contributor threshold defaults to 75% of endowment; the
  // free-rider threshold stays absolute under endowment changes.
  std::optional<int> high_contributor_threshold;
  int free_rider_threshold = 5;

  int effective_max_contribution() const;
  int effective_high_contributor_threshold() const;

  /// Throws std::invalid_argument when the social-dilemma condition
  /// (1 < multiplier < group_size) or a range constraint is violated.
  void validate() const;
};

/// One agent's reward/punishment token assignments, keyed by target
/// agent index. Targets must be distinct from the allocator.
struct SanctionAllocation {
  std::map<int, int> rewards;
  std::map<int, int> punishments;

  int total_reward_tokens() const;
  int total_punishment_tokens() const;
  int total_cost(const GameParameters& p) const;
  bool empty() const { return rewards.empty() && punishments.empty(); }
};

struct PayoffBreakdown {
  double stage1 = 0.0;
  double stage2 = 0.0;
  double total = 0.0;
};

enum class SanctionRejection {
  SELF_TARGET,
  NON_MEMBER_TARGET,
  NEGATIVE_TOKENS,
  OVER_BUDGET,
  NON_INTEGER,
};

std::string to_string(SanctionRejection r);

struct SanctionVerdict {
  bool ok = true;
  std::optional<SanctionRejection> reason;
  std::string detail;
};

/// Stage-1 payoff: tokens kept plus the equal share of the multiplied pool.
double stage1_payoff(const GameParameters& params, int own_contribution,
                     int pool_total, int institution_size);

/// Stage-2 payoff. SI members spend from the sanction endowment and absorb
/// received sanctions; SFI members keep the endowment in full and must pass
/// an empty allocation with zero received sanctions.
double stage2_payoff(const GameParameters& params,
                     const SanctionAllocation& given, int rewards_received,
                     int punishments_received, bool is_si_member);

double total_payoff(const PayoffBreakdown& breakdown);

SanctionVerdict validate_sanctions(const GameParameters& params, int allocator,
                                   const SanctionAllocation& alloc,
                                   const std::set<int>& institution_members);

struct TheoreticalBounds {
  double social_optimum_per_round = 0.0;
  double nash_payoff_per_round = 0.0;
  double marginal_per_capita_return = 0.0;
};

TheoreticalBounds theoretical_bounds(const GameParameters& params);

}  // namespace sanctsim
