#include "doctest.h"
#include "sanctsim/agents.hpp"

using namespace sanctsim;

namespace {

AgentView blank_view(Phase phase) {
  AgentView view;
  view.phase = phase;
  view.round_number = 1;
  return view;
}

PublicHistoryRow row(int display, Institution inst, int contribution,
                     double total) {
  PublicHistoryRow r;
  r.display_number = display;
  r.institution = inst;
  r.contribution = contribution;
  r.total = total;
  return r;
}

}  // namespace

TEST_CASE("full cooperator and free rider extremes") {
  AgentView view = blank_view(Phase::CONTRIBUTION);
  view.current_institution = Institution::SI;
  CHECK(make_full_cooperator()->choose_contribution(view).contribution == 20);
  CHECK(make_full_cooperator()->choose_institution(view).institution ==
        Institution::SI);
  CHECK(make_free_rider()->choose_contribution(view).contribution == 0);
  CHECK(make_free_rider()->choose_institution(view).institution ==
        Institution::SFI);
}

TEST_CASE("fixed contributor validates its parameter") {
  CHECK_THROWS_AS(make_fixed_contributor(-1, Institution::SI),
                  std::invalid_argument);
  AgentView view = blank_view(Phase::CONTRIBUTION);
  PolicyPtr ten = make_fixed_contributor(10, Institution::SFI);
  CHECK(ten->choose_contribution(view).contribution == 10);
  CHECK(ten->choose_institution(view).institution == Institution::SFI);
  PolicyPtr too_big = make_fixed_contributor(25, Institution::SI);
  CHECK_THROWS_AS(too_big->choose_contribution(view), std::runtime_error);
}

TEST_CASE("conditional cooperator follows last-round evidence") {
  PolicyPtr policy = make_conditional_cooperator(12);

  AgentView first = blank_view(Phase::INSTITUTION);
  CHECK(policy->choose_institution(first).institution == Institution::SI);
  AgentView first_c = blank_view(Phase::CONTRIBUTION);
  first_c.current_institution = Institution::SI;
  CHECK(policy->choose_contribution(first_c).contribution == 12);

  // SFI members earned more last round -> switch to SFI.
  AgentView later = blank_view(Phase::INSTITUTION);
  PublicHistoryRound last;
  last.round = 1;
  last.rows = {row(1, Institution::SI, 20, 45.0),
               row(2, Institution::SFI, 0, 50.0),
               row(3, Institution::SFI, 2, 49.0)};
  later.public_history.push_back(last);
  CHECK(policy->choose_institution(later).institution == Institution::SFI);

  // Matches the mean contribution of its current institution.
  AgentView later_c = blank_view(Phase::CONTRIBUTION);
  later_c.current_institution = Institution::SFI;
  later_c.public_history.push_back(last);
  CHECK(policy->choose_contribution(later_c).contribution == 1);  // (0+2)/2
}

TEST_CASE("conditional cooperator stays put on exact ties") {
  PolicyPtr policy = make_conditional_cooperator(10);
  AgentView view = blank_view(Phase::INSTITUTION);
  PublicHistoryRound last;
  last.rows = {row(1, Institution::SI, 10, 44.0),
               row(2, Institution::SFI, 10, 44.0)};
  view.public_history.push_back(last);
  OwnHistoryEntry own;
  own.institution = Institution::SFI;
  view.own_history.push_back(own);
  CHECK(policy->choose_institution(view).institution == Institution::SFI);
}

TEST_CASE("norm enforcer splits budgets with remainder to low displays") {
  PolicyPtr policy = make_norm_enforcer(0.5, 0.5);
  AgentView view = blank_view(Phase::SANCTION);
  view.current_institution = Institution::SI;
  view.current_peer_contributions = {{2, 18}, {4, 20}, {6, 16}, {7, 3}};
  SanctionDecision d = policy->choose_sanctions(view);
  // Reward budget 10 tokens over three high contributors: 4/3/3.
  CHECK(d.allocation.rewards.at(2) == 4);
  CHECK(d.allocation.rewards.at(4) == 3);
  CHECK(d.allocation.rewards.at(6) == 3);
  // Punishment budget 10 tokens on the single free rider.
  CHECK(d.allocation.punishments.at(7) == 10);
  CHECK_THROWS_AS(make_norm_enforcer(0.8, 0.5), std::invalid_argument);
}

TEST_CASE("scripted policy factory dispatch") {
  CHECK(make_scripted_policy("full_cooperator", 0, 0, Institution::SI)
            ->name() == "full_cooperator");
  CHECK(make_scripted_policy("fixed_contributor", 7, 0, Institution::SFI)
            ->name()
            .find("fixed_contributor(7") == 0);
  CHECK_THROWS_AS(make_scripted_policy("nonsense", 0, 0, Institution::SI),
                  std::invalid_argument);
}
