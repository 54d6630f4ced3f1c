#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sanctsim/game_core.hpp"

namespace sanctsim {

enum class Phase { INSTITUTION, CONTRIBUTION, SANCTION };

std::string to_string(Phase phase);

/// One round of the viewing agent's own private record.
struct OwnHistoryEntry {
  int round = 0;
  Institution institution = Institution::SFI;
  std::string institution_reasoning;
  int contribution = 0;
  std::string contribution_reasoning;
  double stage1 = 0.0;
  double stage2 = 0.0;
  double total = 0.0;
  int punishments_received = 0;
  int rewards_received = 0;
  int punishments_assigned = 0;
  int rewards_assigned = 0;
  std::string sanction_reasoning;
  int rank = 0;
};

/// One anonymized all-agent row; display numbers are redrawn every round.
struct PublicHistoryRow {
  int display_number = 0;
  Institution institution = Institution::SFI;
  int contribution = 0;
  int assigned_punishments = 0;
  int assigned_rewards = 0;
  int received_punishments = 0;
  int received_rewards = 0;
  double stage1 = 0.0;
  double stage2 = 0.0;
  double total = 0.0;
};

struct PublicHistoryRound {
  int round = 0;
  std::vector<PublicHistoryRow> rows;  // ordered by display number
};

/// Everything one agent is allowed to see at one decision point.
struct AgentView {
  Phase phase = Phase::INSTITUTION;
  int round_number = 1;
  double cumulative_payoff = 0.0;
  GameParameters params;
  std::vector<OwnHistoryEntry> own_history;        // at most display_window
  std::vector<PublicHistoryRound> public_history;  // at most display_window
  // Present from the contribution phase onward.
  std::optional<Institution> current_institution;
  // SANCTION phase only: display number -> contribution of SI co-members,
  // excluding the viewing agent's own entry.
  std::map<int, int> current_peer_contributions;
};

}  // namespace sanctsim
