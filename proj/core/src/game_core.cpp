#include "sanctsim/game_core.hpp"

#include <cmath>
#include <stdexcept>

namespace sanctsim {

std::string to_string(Institution inst) {
  return inst == Institution::SI ? "SI" : "SFI";
}

std::optional<Institution> institution_from_string(const std::string& s) {
  if (s == "SI") return Institution::SI;
  if (s == "SFI") return Institution::SFI;
  return std::nullopt;
}

int GameParameters::effective_max_contribution() const {
  return max_contribution.value_or(endowment_stage1);
}

int GameParameters::effective_high_contributor_threshold() const {
  if (high_contributor_threshold) return *high_contributor_threshold;
  return static_cast<int>(std::lround(0.75 * endowment_stage1));
}

void GameParameters::validate() const {
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (!(multiplier > 1.0 && multiplier < group_size))
    throw std::invalid_argument(
        "multiplier must satisfy 1 < multiplier < group_size");
  if (endowment_stage1 < 0 || sanction_endowment < 0)
    throw std::invalid_argument("endowments must be non-negative");
  if (reward_cost < 0 || reward_effect < 0 || punishment_cost < 0 ||
      punishment_effect < 0)
    throw std::invalid_argument("sanction costs/effects must be non-negative");
  const int max_c = effective_max_contribution();
  if (min_contribution < 0 || min_contribution > max_c ||
      max_c > endowment_stage1)
    throw std::invalid_argument(
        "need min_contribution <= max_contribution <= endowment_stage1");
  if (display_window < 0)
    throw std::invalid_argument("display_window must be non-negative");
}

int SanctionAllocation::total_reward_tokens() const {
  int total = 0;
  for (const auto& [_, n] : rewards) total += n;
  return total;
}

int SanctionAllocation::total_punishment_tokens() const {
  int total = 0;
  for (const auto& [_, n] : punishments) total += n;
  return total;
}

int SanctionAllocation::total_cost(const GameParameters& p) const {
  return total_reward_tokens() * p.reward_cost +
         total_punishment_tokens() * p.punishment_cost;
}

std::string to_string(SanctionRejection r) {
  switch (r) {
    case SanctionRejection::SELF_TARGET: return "SELF_TARGET";
    case SanctionRejection::NON_MEMBER_TARGET: return "NON_MEMBER_TARGET";
    case SanctionRejection::NEGATIVE_TOKENS: return "NEGATIVE_TOKENS";
    case SanctionRejection::OVER_BUDGET: return "OVER_BUDGET";
    case SanctionRejection::NON_INTEGER: return "NON_INTEGER";
  }
  return "UNKNOWN";
}

double stage1_payoff(const GameParameters& params, int own_contribution,
                     int pool_total, int institution_size) {
  if (institution_size < 1)
    throw std::domain_error("institution_size must be >= 1");
  if (own_contribution < params.min_contribution ||
      own_contribution > params.effective_max_contribution())
    throw std::domain_error("contribution out of range");
  if (own_contribution > pool_total)
    throw std::domain_error("contribution exceeds pool total");
  return (params.endowment_stage1 - own_contribution) +
         params.multiplier * pool_total / institution_size;
}

double stage2_payoff(const GameParameters& params,
                     const SanctionAllocation& given, int rewards_received,
                     int punishments_received, bool is_si_member) {
  if (!is_si_member) {
    if (!given.empty() || rewards_received != 0 || punishments_received != 0)
      throw std::domain_error("non-SI member cannot give or receive sanctions");
    return static_cast<double>(params.sanction_endowment);
  }
  return static_cast<double>(params.sanction_endowment) -
         given.total_cost(params) +
         params.reward_effect * static_cast<double>(rewards_received) -
         params.punishment_effect * static_cast<double>(punishments_received);
}

double total_payoff(const PayoffBreakdown& breakdown) {
  return breakdown.stage1 + breakdown.stage2;
}

namespace {
SanctionVerdict reject(SanctionRejection reason, std::string detail) {
  return SanctionVerdict{false, reason, std::move(detail)};
}
}  // namespace

SanctionVerdict validate_sanctions(const GameParameters& params, int allocator,
                                   const SanctionAllocation& alloc,
                                   const std::set<int>& institution_members) {
  auto check_map = [&](const std::map<int, int>& m,
                       const char* kind) -> std::optional<SanctionVerdict> {
    for (const auto& [target, tokens] : m) {
      if (target == allocator)
        return reject(SanctionRejection::SELF_TARGET,
                      std::string(kind) + " targets the allocator");
      if (!institution_members.contains(target))
        return reject(SanctionRejection::NON_MEMBER_TARGET,
                      std::string(kind) + " targets agent " +
                          std::to_string(target) + " outside the SI");
      if (tokens < 0)
        return reject(SanctionRejection::NEGATIVE_TOKENS,
                      std::string(kind) + " has negative token count");
    }
    return std::nullopt;
  };
  if (auto v = check_map(alloc.rewards, "reward")) return *v;
  if (auto v = check_map(alloc.punishments, "punishment")) return *v;
  const int cost = alloc.total_cost(params);
  if (cost > params.sanction_endowment)
    return reject(SanctionRejection::OVER_BUDGET,
                  "allocation costs " + std::to_string(cost) + " > endowment " +
                      std::to_string(params.sanction_endowment));
  return SanctionVerdict{};
}

TheoreticalBounds theoretical_bounds(const GameParameters& params) {
  TheoreticalBounds b;
  b.social_optimum_per_round =
      params.multiplier * params.endowment_stage1 + params.sanction_endowment;
  b.nash_payoff_per_round =
      static_cast<double>(params.endowment_stage1 + params.sanction_endowment);
  b.marginal_per_capita_return = params.multiplier / params.group_size;
  return b;
}

}  // namespace sanctsim
