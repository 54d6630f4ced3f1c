#include <random>
#include <stdexcept>

#include "doctest.h"
#include "sanctsim/game_core.hpp"

using namespace sanctsim;

TEST_CASE("stage1 payoff matches hand-computed values") {
  GameParameters p;
  // Full cooperation in a 7-member institution: keep 0, share 1.6*140/7.
  CHECK(stage1_payoff(p, 20, 140, 7) == doctest::Approx(32.0).epsilon(1e-12));
  // Zero contribution to an empty pool: keep the endowment.
  CHECK(stage1_payoff(p, 0, 0, 7) == doctest::Approx(20.0));
  // Lone member keeps contribution * multiplier.
  CHECK(stage1_payoff(p, 20, 20, 1) == doctest::Approx(32.0));
  CHECK_THROWS_AS(stage1_payoff(p, 5, 5, 0), std::domain_error);
  CHECK_THROWS_AS(stage1_payoff(p, 25, 25, 2), std::domain_error);
  CHECK_THROWS_AS(stage1_payoff(p, 10, 5, 2), std::domain_error);
}

TEST_CASE("stage2 payoff for SI and SFI members") {
  GameParameters p;
  SanctionAllocation none;
  CHECK(stage2_payoff(p, none, 0, 0, true) == doctest::Approx(20.0));
  CHECK(stage2_payoff(p, none, 0, 0, false) == doctest::Approx(20.0));

  SanctionAllocation give;
  give.punishments[2] = 3;  // cost 3
  give.rewards[1] = 2;      // cost 2
  // 20 - 5 + 1*1 - 3*2 = 10
  CHECK(stage2_payoff(p, give, 1, 2, true) == doctest::Approx(10.0));

  CHECK_THROWS_AS(stage2_payoff(p, give, 0, 0, false), std::domain_error);
  CHECK_THROWS_AS(stage2_payoff(p, none, 1, 0, false), std::domain_error);
}

TEST_CASE("two-member SI worked example totals 41 for the punisher") {
  GameParameters p;
  // P1 contributes 15, P2 contributes 5; pool 20 split between 2.
  const double stage1_p1 = stage1_payoff(p, 15, 20, 2);
  CHECK(stage1_p1 == doctest::Approx(21.0).epsilon(1e-12));
  SanctionAllocation p1_gives;
  p1_gives.punishments[1] = 1;
  const double stage2_p1 = stage2_payoff(p, p1_gives, 1, 0, true);
  CHECK(stage2_p1 == doctest::Approx(20.0));
  CHECK(stage1_p1 + stage2_p1 == doctest::Approx(41.0).epsilon(1e-12));

  // P2 receives the punishment and gives the reward.
  SanctionAllocation p2_gives;
  p2_gives.rewards[0] = 1;
  const double total_p2 =
      stage1_payoff(p, 5, 20, 2) + stage2_payoff(p, p2_gives, 0, 1, true);
  // Stage 1: 15 + 16 = 31. Stage 2: 20 - 1 (reward cost) - 3 (received
  // punishment effect) = 16.
  CHECK(total_p2 == doctest::Approx(47.0).epsilon(1e-9));
}

TEST_CASE("theoretical bounds at defaults") {
  TheoreticalBounds b = theoretical_bounds(GameParameters{});
  CHECK(b.social_optimum_per_round == doctest::Approx(52.0));
  CHECK(b.nash_payoff_per_round == doctest::Approx(40.0));
  CHECK(b.marginal_per_capita_return == doctest::Approx(1.6 / 7.0));
}

TEST_CASE("marginal return of one extra token is multiplier/size - 1") {
  std::vector<GameParameters> sets(1);
  {
    GameParameters q;
    q.multiplier = 1.2;
    sets.push_back(q);
    q.multiplier = 2.5;
    sets.push_back(q);
    q = GameParameters{};
    q.endowment_stage1 = 10;
    sets.push_back(q);
    q.endowment_stage1 = 40;
    sets.push_back(q);
  }
  for (const GameParameters& p : sets) {
    for (int size : {1, 2, 7}) {
      const int c = p.effective_max_contribution() / 2;
      const double diff = stage1_payoff(p, c + 1, c + 1 + 10, size) -
                          stage1_payoff(p, c, c + 10, size);
      CHECK(diff == doctest::Approx(p.multiplier / size - 1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("parameter validation rejects broken configurations") {
  GameParameters p;
  p.multiplier = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.multiplier = 7.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = GameParameters{};
  p.min_contribution = 25;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = GameParameters{};
  p.group_size = 1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_NOTHROW(GameParameters{}.validate());
}

TEST_CASE("effective thresholds follow the endowment") {
  GameParameters p;
  CHECK(p.effective_high_contributor_threshold() == 15);
  CHECK(p.effective_max_contribution() == 20);
  p.endowment_stage1 = 40;
  CHECK(p.effective_high_contributor_threshold() == 30);
  CHECK(p.free_rider_threshold == 5);  // absolute by default
  p.high_contributor_threshold = 12;
  CHECK(p.effective_high_contributor_threshold() == 12);
}

TEST_CASE("sanction validation rejections") {
  GameParameters p;
  const std::set<int> members{0, 1, 2};

  SanctionAllocation a;
  a.punishments[0] = 1;
  CHECK(validate_sanctions(p, 0, a, members).reason ==
        SanctionRejection::SELF_TARGET);

  a = {};
  a.rewards[5] = 1;
  CHECK(validate_sanctions(p, 0, a, members).reason ==
        SanctionRejection::NON_MEMBER_TARGET);

  a = {};
  a.rewards[1] = -2;
  CHECK(validate_sanctions(p, 0, a, members).reason ==
        SanctionRejection::NEGATIVE_TOKENS);

  a = {};
  a.punishments[1] = 15;
  a.rewards[2] = 6;
  CHECK(validate_sanctions(p, 0, a, members).reason ==
        SanctionRejection::OVER_BUDGET);

  a = {};
  a.punishments[1] = 15;
  a.rewards[2] = 5;
  CHECK(validate_sanctions(p, 0, a, members).ok);
}

namespace {

// Independent welfare accounting: total payoffs must equal endowments
// plus the pool surplus, minus destroyed punishment value, plus created
// reward value.
void check_welfare_identity(const GameParameters& p, std::mt19937_64& rng,
                            int trials) {
  const int n = p.group_size;
  std::uniform_int_distribution<int> inst_draw(0, 1);
  std::uniform_int_distribution<int> contribution_draw(
      p.min_contribution, p.effective_max_contribution());
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Institution> institutions(n);
    std::vector<int> contributions(n);
    std::set<int> si;
    for (int i = 0; i < n; ++i) {
      institutions[i] = inst_draw(rng) ? Institution::SI : Institution::SFI;
      contributions[i] = contribution_draw(rng);
      if (institutions[i] == Institution::SI) si.insert(i);
    }
    int pools[2] = {0, 0};
    int sizes[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
      const int k = institutions[i] == Institution::SI ? 0 : 1;
      pools[k] += contributions[i];
      ++sizes[k];
    }

    std::vector<SanctionAllocation> given(n);
    std::vector<int> rewards_received(n, 0), punish_received(n, 0);
    if (si.size() >= 2) {
      for (int i : si) {
        int budget = p.sanction_endowment;
        for (int j : si) {
          if (j == i) continue;
          std::uniform_int_distribution<int> token_draw(0, 3);
          int pun = token_draw(rng), rew = token_draw(rng);
          if (pun * p.punishment_cost > budget) pun = 0;
          budget -= pun * p.punishment_cost;
          if (rew * p.reward_cost > budget) rew = 0;
          budget -= rew * p.reward_cost;
          if (pun > 0) given[i].punishments[j] = pun;
          if (rew > 0) given[i].rewards[j] = rew;
          punish_received[j] += pun;
          rewards_received[j] += rew;
        }
        REQUIRE(validate_sanctions(p, i, given[i], si).ok);
      }
    }

    double total = 0;
    long q = 0, r = 0;
    for (int i = 0; i < n; ++i) {
      const int k = institutions[i] == Institution::SI ? 0 : 1;
      total += stage1_payoff(p, contributions[i], pools[k], sizes[k]);
      total += stage2_payoff(p, given[i], rewards_received[i],
                             punish_received[i],
                             institutions[i] == Institution::SI);
      q += given[i].total_punishment_tokens();
      r += given[i].total_reward_tokens();
    }
    double expected = static_cast<double>(n) * p.endowment_stage1 +
                      static_cast<double>(n) * p.sanction_endowment;
    for (int k = 0; k < 2; ++k) {
      if (sizes[k] > 0) expected += (p.multiplier - 1.0) * pools[k];
    }
    expected -= static_cast<double>(p.punishment_cost + p.punishment_effect) * q;
    expected += static_cast<double>(p.reward_effect - p.reward_cost) * r;
    REQUIRE(total == doctest::Approx(expected).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("welfare identity holds over randomized profiles") {
  std::mt19937_64 rng(20240817);
  std::vector<GameParameters> sets;
  sets.push_back(GameParameters{});
  {
    GameParameters q;
    q.multiplier = 1.2;
    sets.push_back(q);
    q = GameParameters{};
    q.multiplier = 2.5;
    sets.push_back(q);
    q = GameParameters{};
    q.punishment_cost = 1;
    q.punishment_effect = 1;
    sets.push_back(q);
    q = GameParameters{};
    q.punishment_cost = 3;
    q.punishment_effect = 3;
    sets.push_back(q);
    q = GameParameters{};
    q.endowment_stage1 = 10;
    sets.push_back(q);
    q = GameParameters{};
    q.endowment_stage1 = 40;
    sets.push_back(q);
  }
  for (const GameParameters& p : sets) {
    p.validate();
    check_welfare_identity(p, rng, 150);  // 7 sets x 150 > 1000 profiles
  }
}
