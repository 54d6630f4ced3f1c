#include "sanctsim/engine.hpp"

#include <algorithm>
#include <numeric>

namespace sanctsim {

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::INSTITUTION: return "INSTITUTION";
    case Phase::CONTRIBUTION: return "CONTRIBUTION";
    case Phase::SANCTION: return "SANCTION";
  }
  return "UNKNOWN";
}

std::string to_string(RankScope scope) {
  return scope == RankScope::GLOBAL ? "global" : "per_institution";
}

std::optional<RankScope> rank_scope_from_string(const std::string& s) {
  if (s == "global") return RankScope::GLOBAL;
  if (s == "per_institution") return RankScope::PER_INSTITUTION;
  return std::nullopt;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t round_permutation_seed(std::uint64_t run_seed, int round) {
  return splitmix64(run_seed ^ splitmix64(static_cast<std::uint64_t>(round)));
}

std::vector<int> draw_round_permutation(std::mt19937_64& rng, int group_size) {
  std::vector<int> displays(group_size);
  std::iota(displays.begin(), displays.end(), 1);
  std::shuffle(displays.begin(), displays.end(), rng);
  return displays;
}

std::vector<int> assign_ranks(const std::vector<double>& totals) {
  std::vector<int> ranks(totals.size());
  for (std::size_t i = 0; i < totals.size(); ++i) {
    int rank = 1;
    for (std::size_t j = 0; j < totals.size(); ++j) {
      if (totals[j] > totals[i]) ++rank;
    }
    ranks[i] = rank;
  }
  return ranks;
}

AgentView build_agent_view(const GameParameters& params,
                           const std::vector<RoundRecord>& prior_rounds,
                           const std::vector<double>& cumulative_payoffs,
                           int agent, Phase phase, int round_number,
                           std::optional<Institution> current_institution,
                           const std::map<int, int>& peer_contributions) {
  AgentView view;
  view.phase = phase;
  view.round_number = round_number;
  view.cumulative_payoff = cumulative_payoffs[agent];
  view.params = params;
  view.current_institution = current_institution;
  if (phase == Phase::SANCTION) {
    view.current_peer_contributions = peer_contributions;
  }

  const int window = params.display_window;
  const std::size_t start =
      prior_rounds.size() > static_cast<std::size_t>(window)
          ? prior_rounds.size() - window
          : 0;
  for (std::size_t r = start; r < prior_rounds.size(); ++r) {
    const RoundRecord& rec = prior_rounds[r];
    const AgentRoundRecord& own = rec.agents[agent];

    OwnHistoryEntry entry;
    entry.round = rec.round_number;
    entry.institution = own.institution;
    entry.institution_reasoning = own.institution_reasoning;
    entry.contribution = own.contribution;
    entry.contribution_reasoning = own.contribution_reasoning;
    entry.stage1 = own.payoff.stage1;
    entry.stage2 = own.payoff.stage2;
    entry.total = own.payoff.total;
    entry.punishments_received = own.punishments_received;
    entry.rewards_received = own.rewards_received;
    entry.punishments_assigned = own.sanctions_given.total_punishment_tokens();
    entry.rewards_assigned = own.sanctions_given.total_reward_tokens();
    entry.sanction_reasoning = own.sanction_reasoning;
    entry.rank = own.rank;
    view.own_history.push_back(std::move(entry));

    // The anonymized rows use the round's shared permutation so that one
    // display number refers to one entity throughout the round.
    std::vector<int> agent_of_display(rec.agents.size() + 1, -1);
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      agent_of_display[rec.permutation[i]] = static_cast<int>(i);
    }
    PublicHistoryRound pub;
    pub.round = rec.round_number;
    for (int display = 1; display <= static_cast<int>(rec.agents.size());
         ++display) {
      const AgentRoundRecord& a = rec.agents[agent_of_display[display]];
      PublicHistoryRow row;
      row.display_number = display;
      row.institution = a.institution;
      row.contribution = a.contribution;
      row.assigned_punishments = a.sanctions_given.total_punishment_tokens();
      row.assigned_rewards = a.sanctions_given.total_reward_tokens();
      row.received_punishments = a.punishments_received;
      row.received_rewards = a.rewards_received;
      row.stage1 = a.payoff.stage1;
      row.stage2 = a.payoff.stage2;
      row.total = a.payoff.total;
      pub.rows.push_back(row);
    }
    view.public_history.push_back(std::move(pub));
  }
  return view;
}

namespace {

template <typename Fn, typename Decision>
Decision guarded_decision(const EngineConfig& config, Fn&& fn,
                          Decision fallback, bool* fallback_flag,
                          const char* phase_name) {
  try {
    return fn();
  } catch (const std::exception& e) {
    if (!config.fallback_enabled) {
      throw PolicyFailure(std::string(phase_name) + " decision failed: " +
                          e.what());
    }
    *fallback_flag = true;
    fallback.meta.fallback_used = true;
    return fallback;
  }
}

}  // namespace

RoundRecord run_round(const EngineConfig& config, SimulationState& state,
                      const std::vector<PolicyPtr>& agents, int round_number) {
  const GameParameters& params = config.params;
  const int n = params.group_size;

  RoundRecord record;
  record.round_number = round_number;
  record.agents.resize(n);

  std::mt19937_64 perm_rng(round_permutation_seed(config.seed, round_number));
  record.permutation = draw_round_permutation(perm_rng, n);

  std::vector<int> agent_of_display(n + 1, -1);
  for (int i = 0; i < n; ++i) agent_of_display[record.permutation[i]] = i;

  // Phase 1: institution selection.
  for (int i = 0; i < n; ++i) {
    AgentView view =
        build_agent_view(params, state.rounds, state.cumulative_payoffs, i,
                         Phase::INSTITUTION, round_number);
    InstitutionDecision fallback{Institution::SFI, "", {}};
    InstitutionDecision decision = guarded_decision(
        config, [&] { return agents[i]->choose_institution(view); }, fallback,
        &record.agents[i].fallback_institution, "institution");
    record.agents[i].institution = decision.institution;
    record.agents[i].institution_reasoning = decision.reasoning;
    record.agents[i].attempts_institution = decision.meta.attempts;
    record.agents[i].fallback_institution |= decision.meta.fallback_used;
  }

  // Phase 2: simultaneous contributions; views carry no round-t
  // information about others.
  for (int i = 0; i < n; ++i) {
    AgentView view = build_agent_view(
        params, state.rounds, state.cumulative_payoffs, i, Phase::CONTRIBUTION,
        round_number, record.agents[i].institution);
    ContributionDecision fallback{params.min_contribution, "", {}};
    ContributionDecision decision = guarded_decision(
        config,
        [&] {
          ContributionDecision d = agents[i]->choose_contribution(view);
          if (d.contribution < params.min_contribution ||
              d.contribution > params.effective_max_contribution()) {
            throw std::runtime_error("contribution out of range");
          }
          return d;
        },
        fallback, &record.agents[i].fallback_contribution, "contribution");
    record.agents[i].contribution = decision.contribution;
    record.agents[i].contribution_reasoning = decision.reasoning;
    record.agents[i].attempts_contribution = decision.meta.attempts;
    record.agents[i].fallback_contribution |= decision.meta.fallback_used;
  }

  // Phase 3: public goods distribution per institution.
  std::set<int> si_members;
  std::map<Institution, int> pool;
  std::map<Institution, int> size;
  for (int i = 0; i < n; ++i) {
    const Institution inst = record.agents[i].institution;
    pool[inst] += record.agents[i].contribution;
    size[inst] += 1;
    if (inst == Institution::SI) si_members.insert(i);
  }
  for (int i = 0; i < n; ++i) {
    const Institution inst = record.agents[i].institution;
    record.agents[i].payoff.stage1 = stage1_payoff(
        params, record.agents[i].contribution, pool[inst], size[inst]);
  }

  // Phase 4: sanctioning, SI members with at least one co-member.
  if (si_members.size() >= 2) {
    for (int i : si_members) {
      std::map<int, int> peers;
      for (int j : si_members) {
        if (j != i) peers[record.permutation[j]] = record.agents[j].contribution;
      }
      AgentView view = build_agent_view(
          params, state.rounds, state.cumulative_payoffs, i, Phase::SANCTION,
          round_number, Institution::SI, peers);
      SanctionDecision fallback{};
      SanctionDecision decision = guarded_decision(
          config,
          [&] {
            SanctionDecision d = agents[i]->choose_sanctions(view);
            // Translate display numbers back to true agent indices.
            SanctionAllocation true_alloc;
            for (const auto& [display, tokens] : d.allocation.rewards) {
              if (display < 1 || display > n)
                throw std::runtime_error("unknown display number");
              true_alloc.rewards[agent_of_display[display]] = tokens;
            }
            for (const auto& [display, tokens] : d.allocation.punishments) {
              if (display < 1 || display > n)
                throw std::runtime_error("unknown display number");
              true_alloc.punishments[agent_of_display[display]] = tokens;
            }
            SanctionVerdict verdict =
                validate_sanctions(params, i, true_alloc, si_members);
            if (!verdict.ok) {
              throw std::runtime_error("invalid sanction allocation: " +
                                       verdict.detail);
            }
            d.allocation = std::move(true_alloc);
            return d;
          },
          fallback, &record.agents[i].fallback_sanction, "sanction");
      record.agents[i].sanctions_given = decision.allocation;
      record.agents[i].sanction_reasoning = decision.reasoning;
      record.agents[i].attempts_sanction = decision.meta.attempts;
      record.agents[i].fallback_sanction |= decision.meta.fallback_used;
    }
  }

  // Phase 5: payoff calculation. Received sanctions are the column sums
  // of all allocations targeting each agent.
  for (int i = 0; i < n; ++i) {
    for (const auto& [target, tokens] : record.agents[i].sanctions_given.rewards)
      record.agents[target].rewards_received += tokens;
    for (const auto& [target, tokens] :
         record.agents[i].sanctions_given.punishments)
      record.agents[target].punishments_received += tokens;
  }
  for (int i = 0; i < n; ++i) {
    AgentRoundRecord& a = record.agents[i];
    a.payoff.stage2 =
        stage2_payoff(params, a.sanctions_given, a.rewards_received,
                      a.punishments_received, a.institution == Institution::SI);
    a.payoff.total = total_payoff(a.payoff);
  }

  if (config.rank_scope == RankScope::GLOBAL) {
    std::vector<double> totals(n);
    for (int i = 0; i < n; ++i) totals[i] = record.agents[i].payoff.total;
    std::vector<int> ranks = assign_ranks(totals);
    for (int i = 0; i < n; ++i) record.agents[i].rank = ranks[i];
  } else {
    for (Institution inst : {Institution::SI, Institution::SFI}) {
      std::vector<int> members;
      std::vector<double> totals;
      for (int i = 0; i < n; ++i) {
        if (record.agents[i].institution == inst) {
          members.push_back(i);
          totals.push_back(record.agents[i].payoff.total);
        }
      }
      std::vector<int> ranks = assign_ranks(totals);
      for (std::size_t k = 0; k < members.size(); ++k)
        record.agents[members[k]].rank = ranks[k];
    }
  }

  // Phase 6: history update.
  for (int i = 0; i < n; ++i)
    state.cumulative_payoffs[i] += record.agents[i].payoff.total;
  state.rounds.push_back(record);
  return record;
}

RunTranscript run_simulation(const EngineConfig& config,
                             const std::vector<PolicyPtr>& agents) {
  config.params.validate();
  if (static_cast<int>(agents.size()) != config.params.group_size)
    throw std::invalid_argument("roster size must equal group_size");

  RunTranscript transcript;
  transcript.params = config.params;
  transcript.seed = config.seed;
  transcript.prompt_variant = config.prompt_variant;
  transcript.rank_scope = config.rank_scope;
  transcript.fallback_enabled = config.fallback_enabled;
  for (const PolicyPtr& agent : agents) transcript.roster.push_back(agent->name());

  SimulationState state;
  state.cumulative_payoffs.assign(config.params.group_size, 0.0);
  for (int round = 1; round <= config.params.rounds; ++round) {
    try {
      run_round(config, state, agents, round);
    } catch (const PolicyFailure& e) {
      transcript.rounds = state.rounds;
      transcript.abort = AbortInfo{round, e.what()};
      return transcript;
    }
  }
  transcript.rounds = state.rounds;
  return transcript;
}

}  // namespace sanctsim
