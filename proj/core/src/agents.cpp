#include "sanctsim/agents.hpp"

#include <algorithm>
#include <cmath>

namespace sanctsim {

namespace {

std::string scripted_reasoning(const std::string& name) {
  return "scripted policy: " + name;
}

class FullCooperator : public DecisionPolicy {
 public:
  InstitutionDecision choose_institution(const AgentView&) override {
    return {Institution::SI, scripted_reasoning(name()), {}};
  }
  ContributionDecision choose_contribution(const AgentView& view) override {
    return {view.params.effective_max_contribution(),
            scripted_reasoning(name()),
            {}};
  }
  SanctionDecision choose_sanctions(const AgentView&) override {
    return {{}, scripted_reasoning(name()), {}};
  }
  std::string name() const override { return "full_cooperator"; }
};

class FreeRider : public DecisionPolicy {
 public:
  InstitutionDecision choose_institution(const AgentView&) override {
    return {Institution::SFI, scripted_reasoning(name()), {}};
  }
  ContributionDecision choose_contribution(const AgentView& view) override {
    return {view.params.min_contribution, scripted_reasoning(name()), {}};
  }
  SanctionDecision choose_sanctions(const AgentView&) override {
    return {{}, scripted_reasoning(name()), {}};
  }
  std::string name() const override { return "free_rider"; }
};

class FixedContributor : public DecisionPolicy {
 public:
  FixedContributor(int contribution, Institution institution)
      : contribution_(contribution), institution_(institution) {
    if (contribution < 0)
      throw std::invalid_argument("fixed contribution must be non-negative");
  }
  InstitutionDecision choose_institution(const AgentView&) override {
    return {institution_, scripted_reasoning(name()), {}};
  }
  ContributionDecision choose_contribution(const AgentView& view) override {
    if (contribution_ > view.params.effective_max_contribution())
      throw std::runtime_error("fixed contribution exceeds maximum");
    return {contribution_, scripted_reasoning(name()), {}};
  }
  SanctionDecision choose_sanctions(const AgentView&) override {
    return {{}, scripted_reasoning(name()), {}};
  }
  std::string name() const override {
    return "fixed_contributor(" + std::to_string(contribution_) + "," +
           to_string(institution_) + ")";
  }

 private:
  int contribution_;
  Institution institution_;
};

class ConditionalCooperator : public DecisionPolicy {
 public:
  explicit ConditionalCooperator(int initial) : initial_(initial) {
    if (initial < 0)
      throw std::invalid_argument("initial contribution must be non-negative");
  }

  InstitutionDecision choose_institution(const AgentView& view) override {
    if (view.public_history.empty())
      return {Institution::SI, scripted_reasoning(name()), {}};
    const auto& last = view.public_history.back().rows;
    double si_sum = 0, sfi_sum = 0;
    int si_n = 0, sfi_n = 0;
    for (const auto& row : last) {
      if (row.institution == Institution::SI) {
        si_sum += row.total;
        ++si_n;
      } else {
        sfi_sum += row.total;
        ++sfi_n;
      }
    }
    const double si_mean = si_n ? si_sum / si_n : -1e300;
    const double sfi_mean = sfi_n ? sfi_sum / sfi_n : -1e300;
    Institution choice;
    if (si_mean > sfi_mean) {
      choice = Institution::SI;
    } else if (si_mean < sfi_mean) {
      choice = Institution::SFI;
    } else {
      choice = view.own_history.empty() ? Institution::SI
                                        : view.own_history.back().institution;
    }
    return {choice, scripted_reasoning(name()), {}};
  }

  ContributionDecision choose_contribution(const AgentView& view) override {
    int contribution = initial_;
    if (!view.public_history.empty() && view.current_institution) {
      const auto& last = view.public_history.back().rows;
      double sum = 0;
      int count = 0;
      for (const auto& row : last) {
        if (row.institution == *view.current_institution) {
          sum += row.contribution;
          ++count;
        }
      }
      if (count > 0) {
        contribution = static_cast<int>(std::lround(sum / count));
      } else if (!view.own_history.empty()) {
        contribution = view.own_history.back().contribution;
      }
    }
    contribution = std::clamp(contribution, view.params.min_contribution,
                              view.params.effective_max_contribution());
    return {contribution, scripted_reasoning(name()), {}};
  }

  SanctionDecision choose_sanctions(const AgentView&) override {
    return {{}, scripted_reasoning(name()), {}};
  }
  std::string name() const override {
    return "conditional_cooperator(" + std::to_string(initial_) + ")";
  }

 private:
  int initial_;
};

class NormEnforcer : public DecisionPolicy {
 public:
  NormEnforcer(double reward_share, double punish_share)
      : reward_share_(reward_share), punish_share_(punish_share) {
    if (reward_share < 0 || punish_share < 0 ||
        reward_share + punish_share > 1.0)
      throw std::invalid_argument(
          "budget shares must be non-negative and sum to at most 1");
  }

  InstitutionDecision choose_institution(const AgentView&) override {
    return {Institution::SI, scripted_reasoning(name()), {}};
  }
  ContributionDecision choose_contribution(const AgentView& view) override {
    return {view.params.effective_max_contribution(),
            scripted_reasoning(name()),
            {}};
  }

  SanctionDecision choose_sanctions(const AgentView& view) override {
    const GameParameters& p = view.params;
    std::vector<int> free_riders;
    std::vector<int> high_contributors;
    for (const auto& [display, contribution] :
         view.current_peer_contributions) {
      if (contribution <= p.free_rider_threshold) free_riders.push_back(display);
      if (contribution >= p.effective_high_contributor_threshold())
        high_contributors.push_back(display);
    }
    SanctionDecision decision;
    decision.reasoning = scripted_reasoning(name());
    if (p.punishment_cost > 0) {
      spread(static_cast<int>(punish_share_ * p.sanction_endowment /
                              p.punishment_cost),
             free_riders, decision.allocation.punishments);
    }
    if (p.reward_cost > 0) {
      spread(static_cast<int>(reward_share_ * p.sanction_endowment /
                              p.reward_cost),
             high_contributors, decision.allocation.rewards);
    }
    return decision;
  }

  std::string name() const override { return "norm_enforcer"; }

 private:
  // Equal split, remainder to the lowest display numbers first.
  static void spread(int tokens, std::vector<int> targets,
                     std::map<int, int>& out) {
    if (tokens <= 0 || targets.empty()) return;
    std::sort(targets.begin(), targets.end());
    const int base = tokens / static_cast<int>(targets.size());
    int remainder = tokens % static_cast<int>(targets.size());
    for (int display : targets) {
      int amount = base + (remainder > 0 ? 1 : 0);
      if (remainder > 0) --remainder;
      if (amount > 0) out[display] = amount;
    }
  }

  double reward_share_;
  double punish_share_;
};

}  // namespace

PolicyPtr make_full_cooperator() { return std::make_shared<FullCooperator>(); }

PolicyPtr make_free_rider() { return std::make_shared<FreeRider>(); }

PolicyPtr make_fixed_contributor(int contribution, Institution institution) {
  return std::make_shared<FixedContributor>(contribution, institution);
}

PolicyPtr make_conditional_cooperator(int initial) {
  return std::make_shared<ConditionalCooperator>(initial);
}

PolicyPtr make_norm_enforcer(double reward_budget_share,
                             double punish_budget_share) {
  return std::make_shared<NormEnforcer>(reward_budget_share,
                                        punish_budget_share);
}

PolicyPtr make_scripted_policy(const std::string& name, double param_a,
                               double param_b, Institution institution) {
  if (name == "full_cooperator") return make_full_cooperator();
  if (name == "free_rider") return make_free_rider();
  if (name == "fixed_contributor")
    return make_fixed_contributor(static_cast<int>(param_a), institution);
  if (name == "conditional_cooperator")
    return make_conditional_cooperator(static_cast<int>(param_a));
  if (name == "norm_enforcer") return make_norm_enforcer(param_a, param_b);
  throw std::invalid_argument("unknown scripted policy: " + name);
}

}  // namespace sanctsim
