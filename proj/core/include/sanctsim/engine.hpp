#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sanctsim/agents.hpp"
#include "sanctsim/game_core.hpp"
#include "sanctsim/view.hpp"

namespace sanctsim {

inline constexpr const char* kEngineVersion = "0.1.0";

enum class RankScope { GLOBAL, PER_INSTITUTION };

std::string to_string(RankScope scope);
std::optional<RankScope> rank_scope_from_string(const std::string& s);

struct EngineConfig {
  GameParameters params;
  std::uint64_t seed = 0;
  bool fallback_enabled = true;
  RankScope rank_scope = RankScope::GLOBAL;
  std::string prompt_variant = "STANDARD";
};

/// Everything that happened for one agent in one round.
struct AgentRoundRecord {
  Institution institution = Institution::SFI;
  std::string institution_reasoning;
  int contribution = 0;
  std::string contribution_reasoning;
  SanctionAllocation sanctions_given;  // keyed by true agent index
  std::string sanction_reasoning;
  int rewards_received = 0;
  int punishments_received = 0;
  PayoffBreakdown payoff;
  int rank = 0;
  bool fallback_institution = false;
  bool fallback_contribution = false;
  bool fallback_sanction = false;
  int attempts_institution = 1;
  int attempts_contribution = 1;
  int attempts_sanction = 1;
};

struct RoundRecord {
  int round_number = 0;
  std::vector<AgentRoundRecord> agents;
  // permutation[i] is the 1-based display number of agent i this round.
  std::vector<int> permutation;
};

struct AbortInfo {
  int round = 0;
  std::string cause;
};

struct RunTranscript {
  GameParameters params;
  std::uint64_t seed = 0;
  std::string prompt_variant = "STANDARD";
  RankScope rank_scope = RankScope::GLOBAL;
  bool fallback_enabled = true;
  std::vector<std::string> roster;
  std::string engine_version = kEngineVersion;
  std::vector<RoundRecord> rounds;
  std::optional<AbortInfo> abort;

  bool complete() const { return !abort.has_value(); }
};

struct SimulationState {
  std::vector<RoundRecord> rounds;
  std::vector<double> cumulative_payoffs;
};

/// Permutation seed for a round, derived so that rounds are independent
/// of one another but fully reproducible from the run seed.
std::uint64_t round_permutation_seed(std::uint64_t run_seed, int round);

/// Uniform random permutation; returns 1-based display numbers.
std::vector<int> draw_round_permutation(std::mt19937_64& rng, int group_size);

/// Competition ranking by descending total payoff; ties share the
/// minimum rank.
std::vector<int> assign_ranks(const std::vector<double>& totals);

/// Assembles the information agent `agent` may see at `phase` of round
/// `round_number`, given the completed prior rounds.
AgentView build_agent_view(
    const GameParameters& params, const std::vector<RoundRecord>& prior_rounds,
    const std::vector<double>& cumulative_payoffs, int agent, Phase phase,
    int round_number, std::optional<Institution> current_institution = {},
    const std::map<int, int>& peer_contributions = {});

/// Executes one round through all six phases and appends it to `state`.
/// Throws PolicyFailure when an agent fails and fallback is disabled.
RoundRecord run_round(const EngineConfig& config, SimulationState& state,
                      const std::vector<PolicyPtr>& agents, int round_number);

/// Runs the configured number of rounds; on PolicyFailure the transcript
/// carries the rounds completed so far plus an abort marker.
RunTranscript run_simulation(const EngineConfig& config,
                             const std::vector<PolicyPtr>& agents);

}  // namespace sanctsim
